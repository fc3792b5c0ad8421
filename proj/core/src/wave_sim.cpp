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

#include "usbf/wave_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "usbf/errors.hpp"
#include "usbf/parallel.hpp"

namespace usbf {
namespace {

double distance(Point2 p, double ex) { return std::hypot(p.x - ex, p.z); }

// dist[s * n + e] = |p_s - e_e|
std::vector<double> distance_table(const Phantom& ph, const ArrayGeometry& a) {
  std::vector<double> d(ph.size() * a.size());
  for (std::size_t s = 0; s < ph.size(); ++s) {
    const Point2 p{ph.scatterers[s].x, ph.scatterers[s].z};
    for (std::size_t e = 0; e < a.size(); ++e) d[s * a.size() + e] = distance(p, a.element_x[e]);
  }
  return d;
}

void check_phantom(const Phantom& ph) {
  for (const auto& s : ph.scatterers) {
    if (!(s.z > 0.0)) throw InvalidArgument("scatterer depth must be positive");
    if (!std::isfinite(s.x) || !std::isfinite(s.amplitude))
      throw InvalidArgument("scatterer must be finite");
  }
}

void check_coverage(double latest_arrival, const PulseWaveform& pulse, std::size_t n_time,
                    double fs) {
  const double t_end = latest_arrival + pulse.duration();
  if (t_end * fs >= static_cast<double>(n_time - 1)) {
    std::ostringstream msg;
    msg << "time axis too short: echo ends at " << t_end * 1e6 << " us but the record covers "
        << static_cast<double>(n_time - 1) / fs * 1e6 << " us";
    throw ConfigError(msg.str());
  }
}

double spreading(const AcquisitionConfig& cfg, double d_tx, double d_rx) {
  if (!cfg.geometric_spreading) return 1.0;
  return cfg.tx_focus_depth / std::sqrt(d_tx * d_rx);
}

// Adds amp * pulse(t_k - tau) over the pulse support, evaluated in closed form.
void deposit(std::vector<double>& buf, double tau, double amp, const PulseWaveform& pulse,
             double fs) {
  const double dur = pulse.duration();
  const auto k0 = static_cast<std::ptrdiff_t>(std::ceil(tau * fs));
  const auto k1 = static_cast<std::ptrdiff_t>(std::floor((tau + dur) * fs));
  const auto lo = std::max<std::ptrdiff_t>(k0, 0);
  const auto hi = std::min<std::ptrdiff_t>(k1, static_cast<std::ptrdiff_t>(buf.size()) - 1);
  for (std::ptrdiff_t k = lo; k <= hi; ++k)
    buf[static_cast<std::size_t>(k)] += amp * pulse(static_cast<double>(k) / fs - tau);
}

void store(const std::vector<double>& buf, float* out) {
  for (std::size_t k = 0; k < buf.size(); ++k) out[k] = static_cast<float>(buf[k]);
}

}  // namespace

std::vector<double> focusing_delays(const ArrayGeometry& tx, Point2 focus, double c) {
  std::vector<double> dist(tx.size());
  for (std::size_t i = 0; i < tx.size(); ++i) dist[i] = distance(focus, tx.element_x[i]);
  const double far = *std::max_element(dist.begin(), dist.end());
  std::vector<double> d(tx.size());
  for (std::size_t i = 0; i < tx.size(); ++i) d[i] = (far - dist[i]) / c;
  return d;
}

double transmit_time_origin(const ArrayGeometry& tx, double theta, const AcquisitionConfig& cfg) {
  const Point2 f = polar_point(theta, cfg.tx_focus_depth);
  double far = 0.0;
  for (double x : tx.element_x) far = std::max(far, distance(f, x));
  return (far - cfg.tx_focus_depth) / cfg.c;
}

STAChannelData simulate_sta(const Phantom& phantom, const ArrayGeometry& tx_array,
                            const ArrayGeometry& rx_array, const PulseWaveform& pulse,
                            const AcquisitionConfig& cfg) {
  cfg.validate();
  check_phantom(phantom);
  STAChannelData out;
  out.n_tx = tx_array.size();
  out.n_rx = rx_array.size();
  out.fs = cfg.fs;
  out.n_time = record_samples(cfg, pulse, std::max(tx_array.half_extent(), rx_array.half_extent()));
  out.samples.assign(out.n_tx * out.n_rx * out.n_time, 0.0f);

  const auto dt = distance_table(phantom, tx_array);
  const auto dr = distance_table(phantom, rx_array);
  for (std::size_t s = 0; s < phantom.size(); ++s) {
    const double mt = *std::max_element(dt.begin() + s * out.n_tx, dt.begin() + (s + 1) * out.n_tx);
    const double mr = *std::max_element(dr.begin() + s * out.n_rx, dr.begin() + (s + 1) * out.n_rx);
    check_coverage((mt + mr) / cfg.c, pulse, out.n_time, cfg.fs);
  }

  parallel_for(out.n_tx * out.n_rx, [&](std::size_t ch) {
    const std::size_t t = ch / out.n_rx;
    const std::size_t r = ch % out.n_rx;
    std::vector<double> buf(out.n_time, 0.0);
    for (std::size_t s = 0; s < phantom.size(); ++s) {
      const double d_t = dt[s * out.n_tx + t];
      const double d_r = dr[s * out.n_rx + r];
      const double amp = phantom.scatterers[s].amplitude * spreading(cfg, d_t, d_r);
      deposit(buf, (d_t + d_r) / cfg.c, amp, pulse, cfg.fs);
    }
    store(buf, out.samples.data() + ch * out.n_time);
  });
  return out;
}

STAChannelData simulate_sta(const Phantom& phantom, const ArrayGeometry& array,
                            const PulseWaveform& pulse, const AcquisitionConfig& cfg) {
  return simulate_sta(phantom, array, array, pulse, cfg);
}

SAChannelData simulate_sa(const Phantom& phantom, const ArrayGeometry& array,
                          const PulseWaveform& pulse, const AcquisitionConfig& cfg) {
  cfg.validate();
  check_phantom(phantom);
  SAChannelData out;
  out.n_positions = array.size();
  out.fs = cfg.fs;
  out.n_time = record_samples(cfg, pulse, array.half_extent());
  out.samples.assign(out.n_positions * out.n_time, 0.0f);

  const auto d = distance_table(phantom, array);
  const std::size_t n = array.size();
  for (std::size_t s = 0; s < phantom.size(); ++s) {
    const double m = *std::max_element(d.begin() + s * n, d.begin() + (s + 1) * n);
    check_coverage((m + m) / cfg.c, pulse, out.n_time, cfg.fs);
  }

  // Same arithmetic as the STA diagonal: tau = (d + d) / c.
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> buf(out.n_time, 0.0);
    for (std::size_t s = 0; s < phantom.size(); ++s) {
      const double di = d[s * n + i];
      const double amp = phantom.scatterers[s].amplitude * spreading(cfg, di, di);
      deposit(buf, (di + di) / cfg.c, amp, pulse, cfg.fs);
    }
    store(buf, out.samples.data() + i * out.n_time);
  });
  return out;
}

PAChannelData simulate_pa(const Phantom& phantom, const ArrayGeometry& tx_array,
                          const ArrayGeometry& rx_array, const PulseWaveform& pulse,
                          const AcquisitionConfig& cfg, const std::vector<double>& angles) {
  cfg.validate();
  check_phantom(phantom);
  if (!(cfg.tx_focus_depth > 0.0)) throw InvalidArgument("transmit focus depth must be positive");
  if (angles.empty()) throw InvalidArgument("phased-array scan needs at least one line");

  PAChannelData out;
  out.n_lines = angles.size();
  out.n_rx = rx_array.size();
  out.n_tx = tx_array.size();
  out.fs = cfg.fs;
  out.line_angles = angles;
  out.n_time = record_samples(cfg, pulse, std::max(tx_array.half_extent(), rx_array.half_extent()));
  out.samples.assign(out.n_lines * out.n_rx * out.n_time, 0.0f);
  out.tx_delays.resize(out.n_lines * out.n_tx);
  for (std::size_t l = 0; l < out.n_lines; ++l) {
    const auto d = focusing_delays(tx_array, polar_point(angles[l], cfg.tx_focus_depth), cfg.c);
    std::copy(d.begin(), d.end(), out.tx_delays.begin() + static_cast<std::ptrdiff_t>(l * out.n_tx));
  }

  const auto dt = distance_table(phantom, tx_array);
  const auto dr = distance_table(phantom, rx_array);
  const double max_delay = *std::max_element(out.tx_delays.begin(), out.tx_delays.end());
  for (std::size_t s = 0; s < phantom.size(); ++s) {
    const double mt = *std::max_element(dt.begin() + s * out.n_tx, dt.begin() + (s + 1) * out.n_tx);
    const double mr = *std::max_element(dr.begin() + s * out.n_rx, dr.begin() + (s + 1) * out.n_rx);
    check_coverage(max_delay + (mt + mr) / cfg.c, pulse, out.n_time, cfg.fs);
  }

  parallel_for(out.n_lines * out.n_rx, [&](std::size_t ch) {
    const std::size_t l = ch / out.n_rx;
    const std::size_t j = ch % out.n_rx;
    const double* delays = out.tx_delays.data() + l * out.n_tx;
    std::vector<double> buf(out.n_time, 0.0);
    for (std::size_t s = 0; s < phantom.size(); ++s) {
      const double d_r = dr[s * out.n_rx + j];
      for (std::size_t i = 0; i < out.n_tx; ++i) {
        const double d_t = dt[s * out.n_tx + i];
        const double amp = phantom.scatterers[s].amplitude * spreading(cfg, d_t, d_r);
        deposit(buf, delays[i] + (d_t + d_r) / cfg.c, amp, pulse, cfg.fs);
      }
    }
    store(buf, out.samples.data() + ch * out.n_time);
  });
  return out;
}

PAChannelData simulate_pa(const Phantom& phantom, const ArrayGeometry& array,
                          const PulseWaveform& pulse, const AcquisitionConfig& cfg) {
  return simulate_pa(phantom, array, array, pulse, cfg, line_angles(cfg));
}

std::vector<std::size_t> subset_indices(std::size_t n_rx, int factor, SubsetMode mode) {
  if (factor != 1 && factor != 2 && factor != 4 && factor != 8)
    throw InvalidArgument("receive reduction factor must be 1, 2, 4 or 8");
  const auto f = static_cast<std::size_t>(factor);
  if (n_rx < f) throw InvalidArgument("reduction factor exceeds the receive channel count");
  const std::size_t count = (n_rx - 1) / f + 1;
  std::vector<std::size_t> idx(count);
  if (mode == SubsetMode::Stride) {
    for (std::size_t i = 0; i < count; ++i) idx[i] = i * f;
  } else {
    const std::size_t start = (n_rx - count) / 2;
    for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
  }
  return idx;
}

ArrayGeometry subset_array(const ArrayGeometry& array, int factor, SubsetMode mode) {
  const auto idx = subset_indices(array.size(), factor, mode);
  ArrayGeometry out;
  out.pitch = mode == SubsetMode::Stride ? array.pitch * factor : array.pitch;
  for (auto i : idx) out.element_x.push_back(array.element_x[i]);
  return out;
}

namespace {

std::vector<float> gather_rx(const std::vector<float>& src, std::size_t n_events, std::size_t n_rx,
                             std::size_t n_time, const std::vector<std::size_t>& idx) {
  std::vector<float> out(n_events * idx.size() * n_time);
  for (std::size_t e = 0; e < n_events; ++e)
    for (std::size_t r = 0; r < idx.size(); ++r)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>((e * n_rx + idx[r]) * n_time), n_time,
                  out.begin() + static_cast<std::ptrdiff_t>((e * idx.size() + r) * n_time));
  return out;
}

}  // namespace

STAChannelData receive_subset(const STAChannelData& data, int factor, SubsetMode mode) {
  const auto idx = subset_indices(data.n_rx, factor, mode);
  STAChannelData out = data;
  out.n_rx = idx.size();
  out.samples = gather_rx(data.samples, data.n_tx, data.n_rx, data.n_time, idx);
  return out;
}

PAChannelData receive_subset(const PAChannelData& data, int factor, SubsetMode mode) {
  const auto idx = subset_indices(data.n_rx, factor, mode);
  PAChannelData out = data;
  out.n_rx = idx.size();
  out.samples = gather_rx(data.samples, data.n_lines, data.n_rx, data.n_time, idx);
  return out;
}

}  // namespace usbf
