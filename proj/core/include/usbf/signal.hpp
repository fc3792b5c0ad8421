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
#include <span>
#include <vector>

namespace usbf {

/// FFT-based analytic signal x + i H[x]. The input is zero-padded to the next
/// power of two; DC and Nyquist bins are kept, positive bins doubled, negative
/// bins cleared, and the inverse transform is truncated to the input length.
std::vector<std::complex<double>> analytic_signal(std::span<const double> rf);
std::vector<std::complex<double>> analytic_signal(std::span<const float> rf);

/// |analytic_signal(rf)|.
std::vector<double> envelope(std::span<const double> rf);

std::size_t next_pow2(std::size_t n);

}  // namespace usbf
