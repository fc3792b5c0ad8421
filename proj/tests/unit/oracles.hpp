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

// Reference implementations used as independent oracles. They follow the
// textbook definitions directly and favour clarity over speed.

#pragma once

#include <complex>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "usbf/array_model.hpp"
#include "usbf/beamform.hpp"
#include "usbf/neural.hpp"

namespace oracle {

/// Analytic signal through an O(N^2) DFT of the zero-padded sequence.
std::vector<std::complex<double>> dft_analytic(const std::vector<double>& x);

/// Tone burst evaluated from its definition.
double burst(double t, double f0, double n_cycles, bool hann);

/// One multistatic channel: sum over scatterers of a * s(t_k - (|p-e_t| + |p-e_r|)/c).
std::vector<double> echo_channel(const usbf::Phantom& ph, double x_tx, double x_rx, double f0,
                                 double n_cycles, bool hann, double c, double fs,
                                 std::size_t n_time);

/// Sample index of the largest envelope value of a channel (DFT envelope).
std::size_t envelope_argmax(const std::vector<double>& x);

/// Monostatic DAS written out per focal point, using dft_analytic per channel.
std::vector<double> naive_das_sa(const std::vector<std::vector<double>>& channels,
                                 const std::vector<double>& element_x, double c, double fs,
                                 double echo_delay, const usbf::SectorGrid& grid);

/// Sampled Gaussian exp(-x^2 / (2 sigma^2)); its FWHM is 2 sqrt(2 ln 2) sigma.
std::vector<double> gaussian(const std::vector<double>& x, double sigma);

/// Largest relative difference between backprop gradients and central finite
/// differences of the MSE over every parameter of `net`. The relative error of
/// one parameter is |g - fd| / max(|g|, |fd|, floor). The step starts at h and
/// is divided by 10 (at most twice) while the +-step moves any LeakyReLU input
/// across zero, where the loss is not differentiable.
double gradient_check(const usbf::NetworkF64& net, const std::vector<double>& in,
                      const std::vector<double>& target, std::size_t batch, double h = 1e-5,
                      double floor = 1e-7);

/// Random double-precision stack exercising every layer kind: dense, leaky
/// ReLU, reshape and convolutions with 1, 3, 8 and 16 maps.
usbf::NetworkF64 random_mixed_network(std::uint64_t seed);

}  // namespace oracle
