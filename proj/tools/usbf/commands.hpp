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

#include <cstdint>
#include <optional>
#include <string>

#include "usbf/config.hpp"

namespace usbf::cli {

/// Options shared by every command.
struct CommonOptions {
  std::string config;  // empty: desk defaults
  std::optional<std::string> technique;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
};

/// Loads the configuration and applies command-line overrides.
ExperimentConfig resolve_config(const CommonOptions& o);

struct SimulateOptions {
  std::string phantom = "point";
  std::string array = "small";
};
struct TrainOptions {
  std::string dataset;
};
struct ReconstructOptions {
  std::string data;
  std::string weights;
  std::string method;  // empty: dnnb when weights are given, das otherwise
};
struct EvaluateOptions {
  std::string image;
  std::string scene = "point";
};
struct SweepDepthOptions {
  std::string weights;
};
struct SweepApertureOptions {
  std::string weights_dir;
};

void cmd_simulate(const CommonOptions& c, const SimulateOptions& o);
void cmd_build_dataset(const CommonOptions& c);
void cmd_train(const CommonOptions& c, const TrainOptions& o);
void cmd_reconstruct(const CommonOptions& c, const ReconstructOptions& o);
void cmd_evaluate(const CommonOptions& c, const EvaluateOptions& o);
void cmd_sweep_depth(const CommonOptions& c, const SweepDepthOptions& o);
void cmd_sweep_aperture(const CommonOptions& c, const SweepApertureOptions& o);

}  // namespace usbf::cli
