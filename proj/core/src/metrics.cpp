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

#include "usbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <locale>
#include <sstream>

#include "usbf/errors.hpp"

namespace usbf {

LateralProfile make_profile(std::vector<double> positions_mm, std::vector<double> amplitudes) {
  if (positions_mm.size() != amplitudes.size())
    throw InvalidArgument("profile positions and amplitudes differ in length");
  if (positions_mm.size() < 3) throw InvalidArgument("profile needs at least three samples");
  for (std::size_t i = 1; i < positions_mm.size(); ++i)
    if (!(positions_mm[i] > positions_mm[i - 1]))
      throw InvalidArgument("profile positions must increase");
  for (double a : amplitudes)
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("profile amplitudes must be finite and >= 0");
  LateralProfile p;
  p.peak_index = static_cast<std::size_t>(
      std::max_element(amplitudes.begin(), amplitudes.end()) - amplitudes.begin());
  p.positions = std::move(positions_mm);
  p.amplitudes = std::move(amplitudes);
  return p;
}

LateralProfile lateral_profile(const SectorImage& img, Point2 target, double search_radius) {
  if (img.n_lines() < 3 || img.n_depths() == 0) throw InvalidArgument("image too small for a profile");
  double best = -1.0;
  std::size_t best_d = 0;
  for (std::size_t l = 0; l < img.n_lines(); ++l)
    for (std::size_t d = 0; d < img.n_depths(); ++d) {
      const Point2 p = polar_point(img.line_angles[l], img.depth_axis[d]);
      if (std::hypot(p.x - target.x, p.z - target.z) > search_radius) continue;
      if (img.at(l, d) > best) {
        best = img.at(l, d);
        best_d = d;
      }
    }
  if (best < 0.0) throw MeasurementFailed("no image pixel near the target");
  const double r_mm = img.depth_axis[best_d] * 1e3;
  std::vector<double> pos(img.n_lines()), amp(img.n_lines());
  for (std::size_t l = 0; l < img.n_lines(); ++l) {
    pos[l] = r_mm * img.line_angles[l];
    amp[l] = img.at(l, best_d);
  }
  return make_profile(std::move(pos), std::move(amp));
}

namespace {

void check_peak(const LateralProfile& p) {
  const std::size_t n = p.amplitudes.size();
  if (n < 3 || p.peak_index == 0 || p.peak_index + 1 >= n)
    throw MeasurementFailed("profile peak lies on the profile boundary");
  const double a = p.amplitudes[p.peak_index];
  if (!(a > 0.0)) throw MeasurementFailed("profile has no positive peak");
  for (std::size_t i = 0; i < n; ++i)
    if (i != p.peak_index && p.amplitudes[i] == a) throw MeasurementFailed("profile peak is not unique");
}

double crossing(const LateralProfile& p, std::size_t lo, std::size_t hi, double half) {
  const double a0 = p.amplitudes[lo], a1 = p.amplitudes[hi];
  const double x0 = p.positions[lo], x1 = p.positions[hi];
  if (a1 == a0) return x0;
  return x0 + (half - a0) / (a1 - a0) * (x1 - x0);
}

}  // namespace

double fwhm(const LateralProfile& p) {
  check_peak(p);
  const std::size_t pk = p.peak_index;
  const double half = 0.5 * p.amplitudes[pk];
  std::size_t l = pk;
  while (l > 0 && p.amplitudes[l - 1] > half) --l;
  if (l == 0) throw MeasurementFailed("no half-maximum crossing left of the peak");
  std::size_t r = pk;
  while (r + 1 < p.amplitudes.size() && p.amplitudes[r + 1] > half) ++r;
  if (r + 1 == p.amplitudes.size()) throw MeasurementFailed("no half-maximum crossing right of the peak");
  const double xl = crossing(p, l - 1, l, half);
  const double xr = crossing(p, r + 1, r, half);
  return xr - xl;
}

double rms_sidelobe(const LateralProfile& p) {
  check_peak(p);
  const auto& a = p.amplitudes;
  const std::size_t n = a.size();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(n - 1, i + 1);
    double sum = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) sum += a[j];
    s[i] = sum / static_cast<double>(hi - lo + 1);
  }
  auto is_min = [&](std::size_t i) {
    const bool left = i == 0 || s[i] <= s[i - 1];
    const bool right = i + 1 == n || s[i] <= s[i + 1];
    return left && right;
  };
  std::size_t lb = p.peak_index - 1;
  while (lb > 0 && !is_min(lb)) --lb;
  std::size_t rb = p.peak_index + 1;
  while (rb + 1 < n && !is_min(rb)) ++rb;

  double sum2 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > lb && i < rb) continue;
    sum2 += a[i] * a[i];
    ++count;
  }
  if (count == 0) throw MeasurementFailed("profile has no samples outside the mainlobe");
  const double rms = std::sqrt(sum2 / static_cast<double>(count));
  if (rms == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(rms / a[p.peak_index]);
}

bool Region::contains(Point2 p) const {
  const double r = std::hypot(p.x - center.x, p.z - center.z);
  return r >= r_inner && r <= r_outer;
}

RegionStats region_stats(const SectorImage& img, const Region& region) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t l = 0; l < img.n_lines(); ++l)
    for (std::size_t d = 0; d < img.n_depths(); ++d)
      if (region.contains(polar_point(img.line_angles[l], img.depth_axis[d]))) {
        sum += img.at(l, d);
        ++n;
      }
  if (n == 0) throw InvalidArgument("region contains no image pixels");
  RegionStats st;
  st.count = n;
  st.mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t l = 0; l < img.n_lines(); ++l)
    for (std::size_t d = 0; d < img.n_depths(); ++d)
      if (region.contains(polar_point(img.line_angles[l], img.depth_axis[d]))) {
        const double e = img.at(l, d) - st.mean;
        var += e * e;
      }
  st.variance = var / static_cast<double>(n);
  return st;
}

double cnr(const RegionStats& c, const RegionStats& b) {
  if (c.count == 0 || b.count == 0) throw InvalidArgument("CNR needs non-empty regions");
  const double diff = std::abs(b.mean - c.mean);
  if (diff == 0.0) return 0.0;
  return diff / std::sqrt(b.variance + c.variance);
}

double cr(const RegionStats& c, const RegionStats& b) {
  if (c.count == 0 || b.count == 0) throw InvalidArgument("CR needs non-empty regions");
  if (!(b.mean > 0.0)) throw InvalidArgument("CR needs a positive background mean");
  if (c.mean < 0.0) throw InvalidArgument("CR needs a non-negative cyst mean");
  if (c.mean == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(c.mean / b.mean);
}

namespace {

void check_disjoint(const SectorImage& img, const Region& a, const Region& b) {
  for (std::size_t l = 0; l < img.n_lines(); ++l)
    for (std::size_t d = 0; d < img.n_depths(); ++d) {
      const Point2 p = polar_point(img.line_angles[l], img.depth_axis[d]);
      if (a.contains(p) && b.contains(p)) throw InvalidArgument("cyst and background regions overlap");
    }
}

}  // namespace

double cnr(const SectorImage& img, const Region& cyst, const Region& background) {
  check_disjoint(img, cyst, background);
  return cnr(region_stats(img, cyst), region_stats(img, background));
}

double cr(const SectorImage& img, const Region& cyst, const Region& background) {
  check_disjoint(img, cyst, background);
  return cr(region_stats(img, cyst), region_stats(img, background));
}

std::vector<SweepRow> depth_sweep(const std::vector<double>& depths,
                                  const std::function<SectorImage(Point2)>& reconstruct) {
  std::vector<SweepRow> rows;
  rows.reserve(depths.size());
  for (double z : depths) {
    const Point2 target{0.0, z};
    try {
      const SectorImage img = reconstruct(target);
      const LateralProfile prof = lateral_profile(img, target);
      rows.push_back({z * 1e3, fwhm(prof), rms_sidelobe(prof)});
    } catch (const MeasurementFailed& e) {
      throw MeasurementFailed("depth " + format_number(z * 1e3, 3) + " mm: " + e.what());
    }
  }
  return rows;
}

std::string format_number(double v, int precision) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "depth_mm,fwhm_mm,rms_sll_db\n";
  for (const auto& r : rows)
    out += format_number(r.depth_mm, 3) + ',' + format_number(r.fwhm_mm, 6) + ',' +
           format_number(r.rms_sll_db, 4) + '\n';
  return out;
}

}  // namespace usbf
