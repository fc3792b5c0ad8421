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

#include "usbf/signal.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

#include "usbf/errors.hpp"

namespace usbf {
namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW's planner is not thread-safe; plans are created once per size under a
// lock and executed through the new-array interface, which is.
const PlanPair& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  FftwBuffer a(n), b(n);
  PlanPair p;
  const int len = static_cast<int>(n);
  p.forward = fftw_plan_dft_1d(len, a.data, b.data, FFTW_FORWARD, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_1d(len, a.data, b.data, FFTW_BACKWARD, FFTW_ESTIMATE);
  return cache.emplace(n, p).first->second;
}

template <class T>
std::vector<std::complex<double>> analytic_impl(std::span<const T> rf) {
  if (rf.size() < 2) throw InvalidArgument("analytic signal needs at least two samples");
  const std::size_t n = rf.size();
  const std::size_t m = next_pow2(n);
  const PlanPair& plans = plans_for(m);

  FftwBuffer in(m), spec(m);
  for (std::size_t k = 0; k < m; ++k) {
    in.data[k][0] = k < n ? static_cast<double>(rf[k]) : 0.0;
    in.data[k][1] = 0.0;
  }
  fftw_execute_dft(plans.forward, in.data, spec.data);
  if (m > 1) {
    for (std::size_t k = 1; k < m / 2; ++k) {
      spec.data[k][0] *= 2.0;
      spec.data[k][1] *= 2.0;
    }
    for (std::size_t k = m / 2 + 1; k < m; ++k) {
      spec.data[k][0] = 0.0;
      spec.data[k][1] = 0.0;
    }
  }
  fftw_execute_dft(plans.inverse, spec.data, in.data);

  std::vector<std::complex<double>> out(n);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = {in.data[k][0] * scale, in.data[k][1] * scale};
  return out;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

std::vector<std::complex<double>> analytic_signal(std::span<const double> rf) {
  return analytic_impl(rf);
}

std::vector<std::complex<double>> analytic_signal(std::span<const float> rf) {
  return analytic_impl(rf);
}

std::vector<double> envelope(std::span<const double> rf) {
  const auto a = analytic_signal(rf);
  std::vector<double> e(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) e[k] = std::abs(a[k]);
  return e;
}

}  // namespace usbf
