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
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "usbf/array_model.hpp"
#include "usbf/beamform.hpp"
#include "usbf/neural.hpp"
#include "usbf/wave_sim.hpp"

namespace usbf {

/// Focal point in sector coordinates.
struct FocalPoint {
  double theta = 0.0;  // [rad]
  double range = 0.0;  // [m]

  Point2 position() const { return polar_point(theta, range); }
};

/// Per-channel delayed RF window centred on the echo path through a focal point.
struct FocusedPatch {
  std::size_t n_channels = 0;
  std::size_t n_time = 0;
  std::vector<float> values;  // [n_channels x n_time], row-major
  FocalPoint focal_point;
  double scale = 1.0;  // values = raw / scale

  float at(std::size_t ch, std::size_t k) const { return values[ch * n_time + k]; }
  std::size_t center() const { return n_time / 2; }
};

/// Channel data of one technique bound to its arrays. An "event" is a whole SA
/// record, one STA transmit element or one PA transmit line.
class ChannelSource {
 public:
  static ChannelSource sa(SAChannelData data, ArrayGeometry array, AcquisitionConfig cfg);
  static ChannelSource sta(STAChannelData data, ArrayGeometry tx, ArrayGeometry rx,
                           AcquisitionConfig cfg);
  static ChannelSource pa(PAChannelData data, ArrayGeometry tx, ArrayGeometry rx,
                          AcquisitionConfig cfg);

  Technique technique() const { return technique_; }
  std::size_t n_events() const;
  std::size_t n_channels() const { return rx_.size(); }
  std::size_t n_time() const { return n_time_; }
  const ArrayGeometry& tx_array() const { return tx_; }
  const ArrayGeometry& rx_array() const { return rx_; }
  const AcquisitionConfig& config() const { return cfg_; }
  /// PA steering angles (empty for SA and STA).
  const std::vector<double>& line_angles() const { return angles_; }

  /// Fractional sample index of the echo through `fp` on every receive channel.
  void channel_delays(std::size_t event, FocalPoint fp, double* out) const;

  /// Linear-interpolated window; column n_time / 2 sits on the focal delay.
  /// Reads outside the record are zero and counted in `coverage`.
  void focus(std::size_t event, FocalPoint fp, std::size_t n_time, float* out,
             CoverageReport& coverage) const;

 private:
  ChannelSource() = default;
  const float* channel(std::size_t event, std::size_t ch) const;

  Technique technique_ = Technique::SA;
  std::shared_ptr<const std::vector<float>> samples_;
  std::size_t n_tx_ = 1;
  std::size_t n_time_ = 0;
  double fs_ = 0.0;
  ArrayGeometry tx_;
  ArrayGeometry rx_;
  AcquisitionConfig cfg_;
  std::vector<double> angles_;
  std::vector<double> t0_;  // PA transmit time origin per line [s]
};

/// Focused patch at `fp` without normalisation (scale = 1). Throws
/// InvalidArgument when any read falls outside the recorded time window.
FocusedPatch focus_channels(const ChannelSource& source, std::size_t event, FocalPoint fp,
                            std::size_t n_time);

/// Divides by max |value| (1 for an all-zero patch) and records the factor.
void normalize(FocusedPatch& patch);

enum class PairKind { Emulation = 0, Sidelobe = 1 };

struct TrainingPair {
  FocusedPatch input;
  FocusedPatch target;
  PairKind kind = PairKind::Emulation;
  Point2 main_target;        // scatterer the patches were built around
  Point2 interferer;         // sidelobe pairs only
  double interferer_amplitude = 0.0;
  std::size_t event = 0;     // STA transmit element used
};

/// Everything needed to simulate small/large aperture pairs for one technique.
struct EmulationSetup {
  Technique technique = Technique::SA;
  ArrayGeometry tx_small;
  ArrayGeometry rx_small;
  ArrayGeometry tx_large;
  ArrayGeometry rx_large;
  PulseWaveform pulse;
  AcquisitionConfig cfg;
  std::size_t patch_len = 32;
  /// Scales the random offset between target and focal point: lateral up to the
  /// small aperture's first null, axial up to half the patch. 0 focuses exactly
  /// on the target.
  double focus_jitter = 1.0;

  /// Small array of n elements and its (2n - 1)-element partner sharing the pitch.
  static EmulationSetup standard(Technique t, std::size_t n_small, double pitch,
                                 PulseWaveform pulse, AcquisitionConfig cfg,
                                 std::size_t patch_len = 32);

  /// Receive-reduction setup: transmit with `tx`, receive with the stride
  /// subset of `rx_full` for `factor` and emulate twice as many receive
  /// elements at the subset pitch.
  static EmulationSetup receive_reduction(Technique t, const ArrayGeometry& tx,
                                          const ArrayGeometry& rx_full, int factor,
                                          SubsetMode mode, PulseWaveform pulse,
                                          AcquisitionConfig cfg, std::size_t patch_len = 32);

  PatchShape shape() const { return {rx_small.size(), rx_large.size(), patch_len}; }
  /// asin(lambda / D_small): first null of the small receive aperture [rad].
  double first_null() const;
  void validate() const;
};

/// Point target with uniform DOA in the sector and uniform depth.
TrainingPair gen_emulation_pair(std::mt19937_64& rng, const EmulationSetup& setup);

/// Main target plus one interferer in a sidelobe direction; the target patch
/// holds the large-aperture data of the main target alone. `amplitude_scale`
/// multiplies the drawn interferer amplitude (tests use 0).
TrainingPair gen_sidelobe_pair(std::mt19937_64& rng, const EmulationSetup& setup,
                               double amplitude_scale = 1.0);

/// Random generator for pair `index` of a dataset seeded with `seed`.
std::mt19937_64 pair_rng(std::uint64_t seed, std::uint64_t index);

/// Whether pair `index` of a dataset with sidelobe fraction `mix` is a sidelobe pair.
bool is_sidelobe_index(std::size_t index, double mix);

struct DatasetHeader {
  Technique technique = Technique::SA;
  std::size_t n_pairs = 0;
  double sidelobe_mix = 0.5;
  std::uint64_t seed = 0;
  std::size_t n_channels_in = 0;
  std::size_t n_channels_out = 0;
  std::size_t patch_len = 0;
  double focus_jitter = 1.0;
  std::string notes;  // free-form generation parameters

  std::string to_text() const;
  static DatasetHeader from_text(const std::string& text);
};

struct Dataset {
  DatasetHeader header;
  std::vector<TrainingPair> pairs;

  PatchDataset to_patch_dataset() const;
};

Dataset build_dataset(std::size_t n_pairs, double mix, std::uint64_t seed,
                      const EmulationSetup& setup);

/// Tensor container with three records per pair (input, target, meta) and a
/// plain-text header in `<path>.header.txt`.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::filesystem::path dataset_header_path(const std::filesystem::path& path);

}  // namespace usbf
