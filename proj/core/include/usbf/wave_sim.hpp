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
#include <vector>

#include "usbf/array_model.hpp"

namespace usbf {

/// Monostatic records g_SA(x0, t): one channel per array position.
struct SAChannelData {
  std::size_t n_positions = 0;
  std::size_t n_time = 0;
  double fs = 0.0;
  std::vector<float> samples;  // [n_positions x n_time], row-major

  float at(std::size_t i, std::size_t k) const { return samples[i * n_time + k]; }
  const float* channel(std::size_t i) const { return samples.data() + i * n_time; }
};

/// Multistatic records g_STA(x_t, x_r, t).
struct STAChannelData {
  std::size_t n_tx = 0;
  std::size_t n_rx = 0;
  std::size_t n_time = 0;
  double fs = 0.0;
  std::vector<float> samples;  // [n_tx x n_rx x n_time]

  float at(std::size_t t, std::size_t r, std::size_t k) const {
    return samples[(t * n_rx + r) * n_time + k];
  }
  const float* channel(std::size_t t, std::size_t r) const {
    return samples.data() + (t * n_rx + r) * n_time;
  }
};

/// Focused-transmit records, one transmit event per scan line.
struct PAChannelData {
  std::size_t n_lines = 0;
  std::size_t n_rx = 0;
  std::size_t n_time = 0;
  double fs = 0.0;
  std::vector<float> samples;        // [n_lines x n_rx x n_time]
  std::vector<double> line_angles;   // [rad]
  std::vector<double> tx_delays;     // [n_lines x n_tx] relative firing delays [s]
  std::size_t n_tx = 0;

  float at(std::size_t l, std::size_t r, std::size_t k) const {
    return samples[(l * n_rx + r) * n_time + k];
  }
  const float* channel(std::size_t l, std::size_t r) const {
    return samples.data() + (l * n_rx + r) * n_time;
  }
};

/// Transmit focusing delays d_i = (max_j |f - e_j| - |f - e_i|) / c for focal point f.
std::vector<double> focusing_delays(const ArrayGeometry& tx, Point2 focus, double c);

/// Time at which the focused transmit wave crosses the array center's virtual
/// origin: the focal-law arrival at the focus minus the on-axis travel F / c.
double transmit_time_origin(const ArrayGeometry& tx, double theta, const AcquisitionConfig& cfg);

STAChannelData simulate_sta(const Phantom& phantom, const ArrayGeometry& array,
                            const PulseWaveform& pulse, const AcquisitionConfig& cfg);

/// Multistatic acquisition with distinct transmit and receive element sets.
STAChannelData simulate_sta(const Phantom& phantom, const ArrayGeometry& tx_array,
                            const ArrayGeometry& rx_array, const PulseWaveform& pulse,
                            const AcquisitionConfig& cfg);

SAChannelData simulate_sa(const Phantom& phantom, const ArrayGeometry& array,
                          const PulseWaveform& pulse, const AcquisitionConfig& cfg);

/// Lines from line_angles(cfg); transmit and receive with the same array.
PAChannelData simulate_pa(const Phantom& phantom, const ArrayGeometry& array,
                          const PulseWaveform& pulse, const AcquisitionConfig& cfg);

/// Explicit steering angles and separate transmit / receive arrays.
PAChannelData simulate_pa(const Phantom& phantom, const ArrayGeometry& tx_array,
                          const ArrayGeometry& rx_array, const PulseWaveform& pulse,
                          const AcquisitionConfig& cfg, const std::vector<double>& angles);

enum class SubsetMode { Stride, CenterContiguous };

/// Receive channel indices kept by a reduction factor in {1, 2, 4, 8}.
std::vector<std::size_t> subset_indices(std::size_t n_rx, int factor,
                                        SubsetMode mode = SubsetMode::Stride);

/// Receive array after reduction; stride mode multiplies the pitch by `factor`.
ArrayGeometry subset_array(const ArrayGeometry& array, int factor,
                           SubsetMode mode = SubsetMode::Stride);

STAChannelData receive_subset(const STAChannelData& data, int factor,
                              SubsetMode mode = SubsetMode::Stride);
PAChannelData receive_subset(const PAChannelData& data, int factor,
                             SubsetMode mode = SubsetMode::Stride);

}  // namespace usbf
