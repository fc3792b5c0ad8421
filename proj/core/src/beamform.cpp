/*
 * Copyright 2026 The usbf Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "usbf/beamform.hpp"

#include <algorithm>
#include <cmath>

#include "usbf/errors.hpp"
#include "usbf/parallel.hpp"
#include "usbf/signal.hpp"

namespace usbf {
namespace {

using cplx = std::complex<double>;

double dist(Point2 p, double ex) { return std::hypot(p.x - ex, p.z); }

template <class T>
T interp_at(const T* ch, std::size_t n, double u, Interp interp, CoverageReport& cov) {
  ++cov.reads;
  if (!(u >= 0.0) || u > static_cast<double>(n - 1)) {
    ++cov.out_of_range;
    return T{};
  }
  const auto i = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(i);
  if (f == 0.0) return ch[i];
  if (interp == Interp::Linear) return ch[i] * (1.0 - f) + ch[i + 1] * f;
  // Catmull-Rom, edge samples clamped.
  const T p0 = ch[i == 0 ? 0 : i - 1];
  const T p1 = ch[i];
  const T p2 = ch[i + 1];
  const T p3 = ch[std::min(i + 2, n - 1)];
  const double f2 = f * f;
  const double f3 = f2 * f;
  return p0 * (-0.5 * f3 + f2 - 0.5 * f) + p1 * (1.5 * f3 - 2.5 * f2 + 1.0) +
         p2 * (-1.5 * f3 + 2.0 * f2 + 0.5 * f) + p3 * (0.5 * f3 - 0.5 * f2);
}

std::vector<cplx> analytic_channels(const std::vector<float>& samples, std::size_t n_channels,
                                    std::size_t n_time) {
  std::vector<cplx> out(n_channels * n_time);
  parallel_for(n_channels, [&](std::size_t ch) {
    const auto a = analytic_signal(std::span<const float>(samples.data() + ch * n_time, n_time));
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(ch * n_time));
  });
  return out;
}

void check_grid(const SectorGrid& grid) {
  if (grid.angles.empty() || grid.depths.empty()) throw InvalidArgument("empty image grid");
}

ComplexSectorImage blank(const SectorGrid& grid) {
  ComplexSectorImage img;
  img.line_angles = grid.angles;
  img.depth_axis = grid.depths;
  img.values.assign(grid.n_lines() * grid.n_depths(), cplx{});
  return img;
}

// Runs per-line focusing in parallel; per-line coverage is merged in line order.
template <class LineFn>
void for_each_line(ComplexSectorImage& img, LineFn&& fn) {
  std::vector<CoverageReport> cov(img.n_lines());
  parallel_for(img.n_lines(), [&](std::size_t l) { fn(l, cov[l]); });
  for (const auto& c : cov) img.coverage.merge(c);
}

}  // namespace

std::complex<double> read_fractional(const std::complex<double>* ch, std::size_t n, double u,
                                     Interp interp, CoverageReport& coverage) {
  return interp_at(ch, n, u, interp, coverage);
}

double read_fractional(const float* ch, std::size_t n, double u, Interp interp,
                       CoverageReport& coverage) {
  ++coverage.reads;
  if (!(u >= 0.0) || u > static_cast<double>(n - 1)) {
    ++coverage.out_of_range;
    return 0.0;
  }
  const auto i = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(i);
  if (f == 0.0) return ch[i];
  if (interp == Interp::Linear) return ch[i] * (1.0 - f) + ch[i + 1] * f;
  const double p0 = ch[i == 0 ? 0 : i - 1];
  const double p1 = ch[i];
  const double p2 = ch[i + 1];
  const double p3 = ch[std::min(i + 2, n - 1)];
  const double f2 = f * f;
  const double f3 = f2 * f;
  return p0 * (-0.5 * f3 + f2 - 0.5 * f) + p1 * (1.5 * f3 - 2.5 * f2 + 1.0) +
         p2 * (-1.5 * f3 + 2.0 * f2 + 0.5 * f) + p3 * (0.5 * f3 - 0.5 * f2);
}

SectorGrid make_sector_grid(double angle_min, double angle_max, std::size_t n_lines,
                            double depth_min, double depth_max, double depth_step) {
  if (n_lines == 0) throw InvalidArgument("grid needs at least one line");
  if (!(depth_min <= depth_max)) throw InvalidArgument("grid depth range is reversed");
  if (!(depth_step > 0.0)) throw InvalidArgument("grid depth step must be positive");
  SectorGrid g;
  g.angles.resize(n_lines);
  for (std::size_t i = 0; i < n_lines; ++i)
    g.angles[i] = n_lines == 1 ? 0.5 * (angle_min + angle_max)
                               : angle_min + (angle_max - angle_min) * static_cast<double>(i) /
                                                 static_cast<double>(n_lines - 1);
  const auto nd = static_cast<std::size_t>(std::floor((depth_max - depth_min) / depth_step + 1e-9)) + 1;
  g.depths.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) g.depths[d] = depth_min + depth_step * static_cast<double>(d);
  return g;
}

SectorGrid default_grid(const AcquisitionConfig& cfg) {
  SectorGrid g;
  g.angles = line_angles(cfg);
  const auto tmp = make_sector_grid(0.0, 0.0, 1, cfg.depth_min, cfg.depth_max, cfg.c / (2.0 * cfg.fs));
  g.depths = tmp.depths;
  return g;
}

SectorImage magnitude(const ComplexSectorImage& iq) {
  SectorImage img;
  img.line_angles = iq.line_angles;
  img.depth_axis = iq.depth_axis;
  img.coverage = iq.coverage;
  img.values.resize(iq.values.size());
  for (std::size_t i = 0; i < iq.values.size(); ++i) img.values[i] = std::abs(iq.values[i]);
  return img;
}

SectorImage envelope_along_depth(const SectorGrid& grid, const std::vector<double>& rf,
                                 CoverageReport coverage) {
  if (rf.size() != grid.n_lines() * grid.n_depths())
    throw InvalidArgument("line data does not match the grid");
  SectorImage img;
  img.line_angles = grid.angles;
  img.depth_axis = grid.depths;
  img.coverage = coverage;
  img.values.resize(rf.size());
  const std::size_t nd = grid.n_depths();
  for (std::size_t l = 0; l < grid.n_lines(); ++l) {
    if (nd < 2) {
      img.values[l * nd] = std::abs(rf[l * nd]);
      continue;
    }
    const auto e = envelope(std::span<const double>(rf.data() + l * nd, nd));
    std::copy(e.begin(), e.end(), img.values.begin() + static_cast<std::ptrdiff_t>(l * nd));
  }
  return img;
}

ComplexSectorImage das_sa_iq(const SAChannelData& data, const ArrayGeometry& array,
                             const AcquisitionConfig& cfg, const SectorGrid& grid,
                             DasOptions opt) {
  check_grid(grid);
  if (data.n_positions != array.size())
    throw InvalidArgument("SA data channel count does not match the array");
  const auto an = analytic_channels(data.samples, data.n_positions, data.n_time);
  ComplexSectorImage img = blank(grid);
  const double k = data.fs / cfg.c;
  const double off = cfg.echo_delay * data.fs;
  for_each_line(img, [&](std::size_t l, CoverageReport& cov) {
    for (std::size_t d = 0; d < grid.n_depths(); ++d) {
      const Point2 p = polar_point(grid.angles[l], grid.depths[d]);
      cplx acc{};
      for (std::size_t i = 0; i < array.size(); ++i) {
        const double u = 2.0 * dist(p, array.element_x[i]) * k + off;
        acc += interp_at(an.data() + i * data.n_time, data.n_time, u, opt.interp, cov);
      }
      img.values[l * grid.n_depths() + d] = acc;
    }
  });
  return img;
}

SectorImage das_sa(const SAChannelData& data, const ArrayGeometry& array,
                   const AcquisitionConfig& cfg, const SectorGrid& grid, DasOptions opt) {
  return magnitude(das_sa_iq(data, array, cfg, grid, opt));
}

ComplexSectorImage das_sta_iq(const STAChannelData& data, const ArrayGeometry& tx_array,
                              const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                              const SectorGrid& grid, DasOptions opt) {
  check_grid(grid);
  if (data.n_tx != tx_array.size() || data.n_rx != rx_array.size())
    throw InvalidArgument("STA data dimensions do not match the arrays");
  const auto an = analytic_channels(data.samples, data.n_tx * data.n_rx, data.n_time);
  ComplexSectorImage img = blank(grid);
  const double k = data.fs / cfg.c;
  const double off = cfg.echo_delay * data.fs;
  for_each_line(img, [&](std::size_t l, CoverageReport& cov) {
    std::vector<double> dt(data.n_tx), dr(data.n_rx);
    for (std::size_t d = 0; d < grid.n_depths(); ++d) {
      const Point2 p = polar_point(grid.angles[l], grid.depths[d]);
      for (std::size_t t = 0; t < data.n_tx; ++t) dt[t] = dist(p, tx_array.element_x[t]);
      for (std::size_t r = 0; r < data.n_rx; ++r) dr[r] = dist(p, rx_array.element_x[r]);
      cplx acc{};
      for (std::size_t t = 0; t < data.n_tx; ++t)
        for (std::size_t r = 0; r < data.n_rx; ++r)
          acc += interp_at(an.data() + (t * data.n_rx + r) * data.n_time, data.n_time,
                           (dt[t] + dr[r]) * k + off, opt.interp, cov);
      img.values[l * grid.n_depths() + d] = acc;
    }
  });
  return img;
}

SectorImage das_sta(const STAChannelData& data, const ArrayGeometry& tx_array,
                    const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                    const SectorGrid& grid, DasOptions opt) {
  return magnitude(das_sta_iq(data, tx_array, rx_array, cfg, grid, opt));
}

SectorImage das_sta(const STAChannelData& data, const ArrayGeometry& array,
                    const AcquisitionConfig& cfg, const SectorGrid& grid, DasOptions opt) {
  return das_sta(data, array, array, cfg, grid, opt);
}

ComplexSectorImage das_pa_iq(const PAChannelData& data, const ArrayGeometry& tx_array,
                             const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                             const std::vector<double>& depths, DasOptions opt) {
  if (data.n_rx != rx_array.size()) throw InvalidArgument("PA data does not match the receive array");
  if (data.n_tx != tx_array.size()) throw InvalidArgument("PA data does not match the transmit array");
  const SectorGrid grid{data.line_angles, depths};
  check_grid(grid);
  const auto an = analytic_channels(data.samples, data.n_lines * data.n_rx, data.n_time);
  ComplexSectorImage img = blank(grid);
  const double k = data.fs / cfg.c;
  const double off = cfg.echo_delay * data.fs;
  for_each_line(img, [&](std::size_t l, CoverageReport& cov) {
    const double t0 = transmit_time_origin(tx_array, grid.angles[l], cfg);
    for (std::size_t d = 0; d < grid.n_depths(); ++d) {
      const double range = grid.depths[d];
      const Point2 p = polar_point(grid.angles[l], range);
      cplx acc{};
      for (std::size_t j = 0; j < data.n_rx; ++j) {
        const double u = t0 * data.fs + (range + dist(p, rx_array.element_x[j])) * k + off;
        acc += interp_at(an.data() + (l * data.n_rx + j) * data.n_time, data.n_time, u,
                         opt.interp, cov);
      }
      img.values[l * grid.n_depths() + d] = acc;
    }
  });
  return img;
}

SectorImage das_pa(const PAChannelData& data, const ArrayGeometry& tx_array,
                   const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                   const std::vector<double>& depths, DasOptions opt) {
  return magnitude(das_pa_iq(data, tx_array, rx_array, cfg, depths, opt));
}

SectorImage das_pa(const PAChannelData& data, const ArrayGeometry& array,
                   const AcquisitionConfig& cfg, DasOptions opt) {
  return das_pa(data, array, array, cfg, default_grid(cfg).depths, opt);
}

SectorImage log_compress(const SectorImage& img, double dynamic_range_db) {
  if (!(dynamic_range_db > 0.0)) throw InvalidArgument("dynamic range must be positive");
  SectorImage out = img;
  double peak = 0.0;
  for (double v : img.values) peak = std::max(peak, v);
  for (double& v : out.values) {
    if (peak <= 0.0 || v <= 0.0) {
      v = 0.0;
      continue;
    }
    const double db = std::clamp(20.0 * std::log10(v / peak), -dynamic_range_db, 0.0);
    v = (db + dynamic_range_db) / dynamic_range_db;
  }
  return out;
}

RasterImage scan_convert(const SectorImage& img, double pixel_pitch) {
  if (!(pixel_pitch > 0.0)) throw InvalidArgument("pixel pitch must be positive");
  if (img.n_lines() == 0 || img.n_depths() == 0) throw InvalidArgument("empty sector image");
  const auto& th = img.line_angles;
  const auto& rr = img.depth_axis;
  const double r_max = rr.back();
  const double r_min = rr.front();
  double x_lo = 0.0, x_hi = 0.0, z_lo = r_max;
  for (double t : {th.front(), th.back()}) {
    x_lo = std::min(x_lo, r_max * std::sin(t));
    x_hi = std::max(x_hi, r_max * std::sin(t));
    z_lo = std::min(z_lo, r_min * std::cos(t));
  }
  RasterImage out;
  out.pitch = pixel_pitch;
  out.x_min = std::floor(x_lo / pixel_pitch) * pixel_pitch;
  out.z_min = std::floor(z_lo / pixel_pitch) * pixel_pitch;
  out.nx = static_cast<std::size_t>(std::ceil((x_hi - out.x_min) / pixel_pitch)) + 1;
  out.nz = static_cast<std::size_t>(std::ceil((r_max - out.z_min) / pixel_pitch)) + 1;
  out.pixels.assign(out.nx * out.nz, 0.0);

  const std::size_t nl = img.n_lines();
  const std::size_t nd = img.n_depths();
  const double dr = nd > 1 ? rr[1] - rr[0] : 1.0;
  for (std::size_t iz = 0; iz < out.nz; ++iz) {
    for (std::size_t ix = 0; ix < out.nx; ++ix) {
      const double x = out.x_min + pixel_pitch * static_cast<double>(ix);
      const double z = out.z_min + pixel_pitch * static_cast<double>(iz);
      const double r = std::hypot(x, z);
      const double t = std::atan2(x, z);
      const double eps = 1e-12;
      if (t < th.front() - eps || t > th.back() + eps || r < r_min - eps || r > r_max + eps) continue;

      std::size_t l0 = 0;
      double ft = 0.0;
      if (nl > 1) {
        const auto it = std::upper_bound(th.begin(), th.end(), t);
        l0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - th.begin() - 1, 0,
                                                                 static_cast<std::ptrdiff_t>(nl) - 2));
        ft = std::clamp((t - th[l0]) / (th[l0 + 1] - th[l0]), 0.0, 1.0);
      }
      std::size_t d0 = 0;
      double fr = 0.0;
      if (nd > 1) {
        const double u = std::clamp((r - r_min) / dr, 0.0, static_cast<double>(nd - 1));
        d0 = std::min(static_cast<std::size_t>(u), nd - 2);
        fr = u - static_cast<double>(d0);
      }
      const std::size_t l1 = nl > 1 ? l0 + 1 : l0;
      const std::size_t d1 = nd > 1 ? d0 + 1 : d0;
      const double v = (1 - ft) * ((1 - fr) * img.at(l0, d0) + fr * img.at(l0, d1)) +
                       ft * ((1 - fr) * img.at(l1, d0) + fr * img.at(l1, d1));
      out.pixels[iz * out.nx + ix] = v;
    }
  }
  return out;
}

}  // namespace usbf
