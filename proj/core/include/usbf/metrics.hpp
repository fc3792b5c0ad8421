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

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "usbf/array_model.hpp"
#include "usbf/beamform.hpp"

namespace usbf {

/// Envelope samples across scan lines at one depth.
struct LateralProfile {
  std::vector<double> positions;   // arc length R * theta [mm], increasing
  std::vector<double> amplitudes;  // >= 0
  std::size_t peak_index = 0;
};

/// Validates the profile and locates its global maximum.
LateralProfile make_profile(std::vector<double> positions_mm, std::vector<double> amplitudes);

/// Profile through the strongest pixel within `search_radius` [m] of `target`,
/// taken along the depth row of that pixel.
LateralProfile lateral_profile(const SectorImage& img, Point2 target, double search_radius = 2e-3);

/// Distance between the half-maximum crossings nearest the peak [mm].
double fwhm(const LateralProfile& profile);

/// 20 log10(rms(outside mainlobe) / peak) [dB]. The mainlobe ends at the first
/// local minima of the 3-sample moving average on either side of the peak.
double rms_sidelobe(const LateralProfile& profile);

struct RegionStats {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

/// Annulus r_inner <= |p - center| <= r_outer; r_inner = 0 gives a disc.
struct Region {
  Point2 center;
  double r_inner = 0.0;
  double r_outer = 0.0;

  bool contains(Point2 p) const;
  static Region disc(Point2 center, double radius) { return {center, 0.0, radius}; }
  static Region annulus(Point2 center, double r_in, double r_out) { return {center, r_in, r_out}; }
};

/// Mean and population variance of the linear envelope over pixels inside `region`.
RegionStats region_stats(const SectorImage& img, const Region& region);

/// |mu_b - mu_c| / sqrt(var_b + var_c); 0 when both regions are constant and equal.
double cnr(const RegionStats& cyst, const RegionStats& background);
/// 20 log10(mu_c / mu_b); -infinity when mu_c = 0.
double cr(const RegionStats& cyst, const RegionStats& background);

/// Image versions; regions must be non-empty and share no pixel.
double cnr(const SectorImage& img, const Region& cyst, const Region& background);
double cr(const SectorImage& img, const Region& cyst, const Region& background);

struct SweepRow {
  double depth_mm = 0.0;
  double fwhm_mm = 0.0;
  double rms_sll_db = 0.0;
};

/// Reconstructs a single point target at each depth on the broadside line and
/// measures its profile. Measurement failures are rethrown naming the depth.
std::vector<SweepRow> depth_sweep(const std::vector<double>& depths,
                                  const std::function<SectorImage(Point2 target)>& reconstruct);

std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Fixed-point formatting with '.' decimals regardless of the global locale.
std::string format_number(double v, int precision = 6);

}  // namespace usbf
