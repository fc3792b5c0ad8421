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

#include <complex>
#include <cstddef>
#include <vector>

#include "usbf/array_model.hpp"
#include "usbf/wave_sim.hpp"

namespace usbf {

/// Focal-point grid in sector coordinates: steering angle x range.
struct SectorGrid {
  std::vector<double> angles;  // [rad]
  std::vector<double> depths;  // [m], uniform

  std::size_t n_lines() const { return angles.size(); }
  std::size_t n_depths() const { return depths.size(); }
  double depth_step() const { return depths.size() > 1 ? depths[1] - depths[0] : 0.0; }
};

/// Uniform grid from angle_min to angle_max (inclusive) and depth_min in steps
/// of depth_step up to depth_max.
SectorGrid make_sector_grid(double angle_min, double angle_max, std::size_t n_lines,
                            double depth_min, double depth_max, double depth_step);

/// Grid over the configured sector and depth range with c / (2 fs) depth spacing.
SectorGrid default_grid(const AcquisitionConfig& cfg);

/// Reads of channel data that fell outside the recorded time window.
struct CoverageReport {
  std::size_t reads = 0;
  std::size_t out_of_range = 0;

  bool complete() const { return out_of_range == 0; }
  void merge(const CoverageReport& o) {
    reads += o.reads;
    out_of_range += o.out_of_range;
  }
};

struct SectorImage {
  std::vector<double> line_angles;
  std::vector<double> depth_axis;
  std::vector<double> values;  // [n_lines x n_depths], envelope
  CoverageReport coverage;

  std::size_t n_lines() const { return line_angles.size(); }
  std::size_t n_depths() const { return depth_axis.size(); }
  double at(std::size_t l, std::size_t d) const { return values[l * depth_axis.size() + d]; }
  double& at(std::size_t l, std::size_t d) { return values[l * depth_axis.size() + d]; }
  SectorGrid grid() const { return {line_angles, depth_axis}; }
};

/// Coherent sum before envelope detection.
struct ComplexSectorImage {
  std::vector<double> line_angles;
  std::vector<double> depth_axis;
  std::vector<std::complex<double>> values;
  CoverageReport coverage;

  std::size_t n_lines() const { return line_angles.size(); }
  std::size_t n_depths() const { return depth_axis.size(); }
  std::complex<double> at(std::size_t l, std::size_t d) const {
    return values[l * depth_axis.size() + d];
  }
};

SectorImage magnitude(const ComplexSectorImage& iq);

/// Envelope of each line's real-valued depth sequence (used by the emulation pipeline).
SectorImage envelope_along_depth(const SectorGrid& grid, const std::vector<double>& rf,
                                 CoverageReport coverage = {});

struct RasterImage {
  double x_min = 0.0;
  double z_min = 0.0;
  double pitch = 0.0;
  std::size_t nx = 0;
  std::size_t nz = 0;
  std::vector<double> pixels;  // [nz x nx], row = depth

  double at(std::size_t iz, std::size_t ix) const { return pixels[iz * nx + ix]; }
};

enum class Interp { Linear, Cubic };

struct DasOptions {
  Interp interp = Interp::Linear;
};

ComplexSectorImage das_sa_iq(const SAChannelData& data, const ArrayGeometry& array,
                             const AcquisitionConfig& cfg, const SectorGrid& grid,
                             DasOptions opt = {});
SectorImage das_sa(const SAChannelData& data, const ArrayGeometry& array,
                   const AcquisitionConfig& cfg, const SectorGrid& grid, DasOptions opt = {});

ComplexSectorImage das_sta_iq(const STAChannelData& data, const ArrayGeometry& tx_array,
                              const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                              const SectorGrid& grid, DasOptions opt = {});
SectorImage das_sta(const STAChannelData& data, const ArrayGeometry& array,
                    const AcquisitionConfig& cfg, const SectorGrid& grid, DasOptions opt = {});
SectorImage das_sta(const STAChannelData& data, const ArrayGeometry& tx_array,
                    const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                    const SectorGrid& grid, DasOptions opt = {});

/// Dynamic receive focusing along each transmitted line. The two-way delay to
/// range R on line theta is t0(theta) + R / c + |p - e_j| / c with t0 from
/// transmit_time_origin().
ComplexSectorImage das_pa_iq(const PAChannelData& data, const ArrayGeometry& tx_array,
                             const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                             const std::vector<double>& depths, DasOptions opt = {});
SectorImage das_pa(const PAChannelData& data, const ArrayGeometry& array,
                   const AcquisitionConfig& cfg, DasOptions opt = {});
SectorImage das_pa(const PAChannelData& data, const ArrayGeometry& tx_array,
                   const ArrayGeometry& rx_array, const AcquisitionConfig& cfg,
                   const std::vector<double>& depths, DasOptions opt = {});

/// 20 log10(v / max) clipped to [-dynamic_range_db, 0] and mapped onto [0, 1].
SectorImage log_compress(const SectorImage& img, double dynamic_range_db);

/// Bilinear (theta, R) interpolation onto a Cartesian grid whose nodes are
/// integer multiples of pixel_pitch; pixels outside the sector are 0.
RasterImage scan_convert(const SectorImage& img, double pixel_pitch);

/// Channel read at fractional sample position u with the given interpolation;
/// positions outside the record return 0 and bump coverage.out_of_range.
std::complex<double> read_fractional(const std::complex<double>* ch, std::size_t n, double u,
                                     Interp interp, CoverageReport& coverage);
double read_fractional(const float* ch, std::size_t n, double u, Interp interp,
                       CoverageReport& coverage);

}  // namespace usbf
