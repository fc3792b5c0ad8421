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
#include <memory>
#include <span>
#include <vector>

#include "usbf/beamform.hpp"
#include "usbf/dataset.hpp"
#include "usbf/neural.hpp"

namespace usbf {

/// Where a patch came from: acquisition event, focal point and normalisation factor.
struct FocalContext {
  std::size_t event = 0;
  FocalPoint focal;
  double scale = 1.0;
};

/// Maps normalised small-aperture patches to the coherent sum of the emulated
/// large-aperture channels at the patch centre column (normalised units).
class PatchEmulator {
 public:
  virtual ~PatchEmulator() = default;
  virtual PatchShape shape() const = 0;
  virtual Technique technique() const = 0;
  /// inputs holds ctx.size() patches back to back; out receives one value per patch.
  virtual void center_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                           std::span<double> out) const = 0;
  /// Channel sums of columns n_time/2 - radius .. n_time/2 + radius, 2*radius+1
  /// values per patch.
  virtual void column_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                           std::size_t radius, std::span<double> out) const = 0;
};

namespace detail {
struct CenterPlan;
}

/// Task tag stored with trained weights so a network is only used for its technique.
std::uint32_t technique_tag(Technique t);

/// Runs a trained network. By default only the layers' receptive field of the
/// centre column is evaluated; `full_forward` runs the whole output patch.
class NetworkEmulator final : public PatchEmulator {
 public:
  NetworkEmulator(const Network& net, Technique technique, bool full_forward = false);
  PatchShape shape() const override { return net_.shape; }
  Technique technique() const override { return technique_; }
  void center_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                   std::span<double> out) const override;
  void column_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                   std::size_t radius, std::span<double> out) const override;

 private:
  Network net_;
  Technique technique_;
  std::shared_ptr<const detail::CenterPlan> plan_;  // null: run the full forward pass
};

/// Ground truth: focuses simulated large-aperture data at the same focal point
/// and rescales it by the small patch's normalisation factor.
class OracleEmulator final : public PatchEmulator {
 public:
  explicit OracleEmulator(ChannelSource large, std::size_t patch_len);
  PatchShape shape() const override;
  Technique technique() const override { return large_.technique(); }
  void center_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                   std::span<double> out) const override;
  void column_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                   std::size_t radius, std::span<double> out) const override;

 private:
  ChannelSource large_;
  std::size_t patch_len_;
};

struct DnnbOptions {
  /// 0 uses only each patch's centre column. r > 0 also lets columns centre +- j
  /// (j <= r) land on the depth sample j steps away and averages what each depth
  /// sample receives; this needs a depth step of one round-trip sample, c / (2 fs).
  std::size_t overlap_radius = 0;
};

/// Focus small-aperture data at every grid sample, emulate, sum the centre
/// column and take the envelope along depth. STA events are compounded
/// coherently before envelope detection. For PA the grid lines must be the
/// acquisition lines.
SectorImage dnnb_reconstruct(const ChannelSource& small, const PatchEmulator& emulator,
                             const SectorGrid& grid, DnnbOptions opt = {});

/// Channel-summed centre columns before envelope detection, [n_lines x n_depths].
std::vector<double> dnnb_rf(const ChannelSource& small, const PatchEmulator& emulator,
                            const SectorGrid& grid, CoverageReport& coverage,
                            DnnbOptions opt = {});

}  // namespace usbf
