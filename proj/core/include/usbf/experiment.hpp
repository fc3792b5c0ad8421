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
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "usbf/config.hpp"
#include "usbf/dataset.hpp"
#include "usbf/metrics.hpp"
#include "usbf/pipeline.hpp"

namespace usbf {

/// Channel data of any technique together with the geometry it was recorded with.
struct Acquisition {
  Technique technique = Technique::SA;
  ArrayGeometry tx;
  ArrayGeometry rx;
  AcquisitionConfig cfg;
  std::variant<SAChannelData, STAChannelData, PAChannelData> data;

  ChannelSource source() const;
  /// Keeps every factor-th receive channel (SA data has no separate receive
  /// dimension and is rejected).
  Acquisition receive_subset(int factor, SubsetMode mode) const;
};

/// Simulates `phantom`; PA fires one line per entry of `pa_angles`.
Acquisition acquire(Technique t, const Phantom& phantom, const ArrayGeometry& tx,
                    const ArrayGeometry& rx, const PulseWaveform& pulse,
                    const AcquisitionConfig& cfg, const std::vector<double>& pa_angles);

/// Delay-and-sum envelope on `grid` (PA: grid lines must be the acquisition lines).
SectorImage das_image(const Acquisition& acq, const SectorGrid& grid, DasOptions opt = {});

/// DNNB envelope on `grid` using a trained network for the acquisition's technique.
SectorImage dnnb_image(const Acquisition& acq, const Network& net, const SectorGrid& grid,
                       DnnbOptions opt = {});

/// Phantom plus the image grid and measurement geometry that go with it.
struct Scene {
  std::string name;
  Phantom phantom;
  SectorGrid grid;
  std::vector<Point2> targets;
  std::optional<Region> cyst;
  std::optional<Region> background;
};

/// Single point target with a dense grid around it.
Scene point_scene(const ExperimentConfig& cfg, Point2 target);
/// Every configured point target; the dense grid is centred on the first one
/// and extended in depth to cover all of them.
Scene points_scene(const ExperimentConfig& cfg);
/// Speckle field with an anechoic cyst and its statistics regions.
Scene cyst_scene(const ExperimentConfig& cfg);
/// No scatterers, full configured sector.
Scene empty_scene(const ExperimentConfig& cfg);
/// "point", "cyst" or "empty".
Scene make_scene(const ExperimentConfig& cfg, const std::string& name);

/// Builds a dataset for `setup` and trains a fresh network on it.
struct TrainedModel {
  Network net;
  std::vector<EpochRecord> history;
};
TrainedModel train_emulator(const ExperimentConfig& cfg, const EmulationSetup& setup,
                            std::uint64_t seed, bool verbose = false);

struct ImageQuality {
  double fwhm_mm = 0.0;
  double rms_sll_db = 0.0;
};
ImageQuality point_quality(const SectorImage& img, Point2 target);

struct ContrastQuality {
  double cr_db = 0.0;
  double cnr = 0.0;
};
ContrastQuality contrast_quality(const SectorImage& img, const Scene& scene);

/// One row of the receive-aperture study.
struct ApertureRow {
  int factor = 1;
  std::size_t n_rx = 0;
  ContrastQuality das;
  ContrastQuality dnnb;
};

/// Cyst scene acquired with the full small array, then reduced in receive by
/// each configured factor. `network_for` supplies the emulator for a factor's setup.
std::vector<ApertureRow> aperture_sweep(
    const ExperimentConfig& cfg,
    const std::function<Network(const EmulationSetup& setup, int factor)>& network_for);

/// Setup for one receive-reduction factor of the aperture study.
EmulationSetup aperture_setup(const ExperimentConfig& cfg, int factor);

std::string aperture_csv(const std::vector<ApertureRow>& rows);

}  // namespace usbf
