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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "usbf/array_model.hpp"
#include "usbf/beamform.hpp"
#include "usbf/dataset.hpp"
#include "usbf/neural.hpp"
#include "usbf/wave_sim.hpp"

namespace usbf {

/// Lateral / depth position in millimetres, as written in configuration files.
struct PointMm {
  double x = 0.0;
  double z = 0.0;
  bool operator==(const PointMm&) const = default;
};

/// Every tunable of an experiment, stored in the units used by the text format
/// (mm, MHz, degrees). Defaults are the desk-scale setup.
struct ExperimentConfig {
  // [experiment]
  Technique technique = Technique::SA;
  std::uint64_t seed = 1;

  // [acquisition]
  double speed_of_sound = 1540.0;  // m/s
  double sampling_rate_mhz = 16.0;
  double depth_min_mm = 10.0;
  double depth_max_mm = 70.0;
  double sector_deg = 48.0;
  std::size_t scan_lines = 33;
  double tx_focus_mm = 50.0;
  bool geometric_spreading = false;
  bool pulse_center_reference = true;  // beamform on the pulse envelope peak

  // [array]
  std::size_t n_small = 17;  // the large array has 2 n_small - 1 elements
  double element_width_mm = 0.220;
  double kerf_mm = 0.044;

  // [pulse]
  double f0_mhz = 3.5;
  double cycles = 1.75;
  Window window = Window::Hann;

  // [dataset]
  std::size_t pairs = 8000;
  double sidelobe_mix = 0.5;
  std::size_t patch_len = 32;
  double focus_jitter = 1.0;

  // [network]
  std::vector<std::size_t> dense_widths{512, 512};
  std::vector<std::size_t> conv_maps{16, 16};
  std::size_t kernel = 3;
  double leaky_slope = 0.3;

  // [train]
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double decay = 1e-8;
  double validation_fraction = 0.1;
  int plateau_patience = 5;
  double plateau_factor = 0.5;
  double plateau_min_delta = 0.0;

  // [imaging]
  double dynamic_range_db = 60.0;
  double pixel_pitch_mm = 0.1;
  Interp interp = Interp::Linear;
  std::size_t overlap_radius = 0;  // DNNB column overlap averaging, 0 = centre column only

  // [phantom]
  std::vector<PointMm> points_mm{{0.0, 50.0}};
  double cyst_x_mm = 0.0;
  double cyst_z_mm = 45.0;
  double cyst_radius_mm = 4.0;
  double region_half_width_mm = 10.0;
  double region_z_min_mm = 35.0;
  double region_z_max_mm = 55.0;
  std::size_t scatterers = 4000;
  double cyst_inner_fraction = 0.8;       // cyst statistics disc, fraction of the radius
  double background_inner_fraction = 1.25;
  double background_outer_fraction = 2.0;

  // [scan]
  double point_sector_deg = 16.0;
  std::size_t point_lines = 65;
  double point_depth_margin_mm = 5.0;
  double cyst_sector_deg = 28.0;
  std::size_t cyst_lines = 57;

  // [sweep]
  std::vector<double> depths_mm{20.0, 30.0, 40.0, 50.0, 60.0};
  std::vector<int> aperture_factors{1, 2, 4, 8};
  SubsetMode subset_mode = SubsetMode::Stride;
  Technique aperture_technique = Technique::PA;

  static ExperimentConfig desk();
  /// 33 / 65 elements, 65 lines, 30 000 pairs.
  static ExperimentConfig full_scale();

  /// Parses `[section]` headers and `key = value` lines on top of the desk
  /// defaults. Unknown sections or keys, duplicates and malformed values throw
  /// ConfigError naming the line.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Complete, re-parseable listing of every key.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;
  void validate() const;

  double pitch() const { return (element_width_mm + kerf_mm) * 1e-3; }
  PulseWaveform pulse() const;
  AcquisitionConfig acquisition() const;
  ArrayGeometry small_array() const;
  ArrayGeometry large_array() const;
  NetworkConfig network() const;
  TrainConfig training(std::uint64_t seed_offset = 0) const;
  /// Small/large pair for `t` with the dataset settings applied.
  EmulationSetup emulation_setup(Technique t) const;

  bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace usbf
