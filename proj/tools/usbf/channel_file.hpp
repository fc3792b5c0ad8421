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

#include <filesystem>
#include <string>

#include "usbf/config.hpp"
#include "usbf/experiment.hpp"

namespace usbf::cli {

enum class ArrayChoice { Small, Large };

ArrayChoice parse_array_choice(const std::string& s);
std::string to_string(ArrayChoice a);

/// Simulated channel data plus what is needed to rebuild its geometry from a config.
struct ChannelFile {
  Acquisition acquisition;
  ArrayChoice array = ArrayChoice::Small;
  std::string scene;  // "point", "cyst" or "empty"
  SectorGrid grid;
};

/// Simulates `scene_name` with the configured technique on the chosen array.
ChannelFile simulate_scene(const ExperimentConfig& cfg, const std::string& scene_name,
                           ArrayChoice array);

// Records: samples, meta, grid angles, grid depths. Geometry is not stored in
// float32; it is rebuilt from the configuration and checked against the file.
void save_channel_file(const ChannelFile& f, const std::filesystem::path& path);
ChannelFile load_channel_file(const ExperimentConfig& cfg, const std::filesystem::path& path);

/// Envelope image as records: values [n_lines x n_depths], angles [rad], depths [m].
void save_envelope(const SectorImage& img, const std::filesystem::path& path);
SectorImage load_envelope(const std::filesystem::path& path);

}  // namespace usbf::cli
