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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "usbf/errors.hpp"
#include "usbf/wave_sim.hpp"

using namespace usbf;

namespace {

const PulseWaveform kPulse = make_pulse(3.5e6, 1.75, 16e6, Window::Hann);
const ArrayGeometry kArray = make_linear_array(17, 0.220e-3, 0.044e-3);

Phantom random_phantom(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> ux(-0.015, 0.015), uz(0.012, 0.065);
  std::normal_distribution<double> amp;
  Phantom p;
  for (std::size_t i = 0; i < n; ++i) p.scatterers.push_back({ux(rng), uz(rng), amp(rng)});
  return p;
}

bool all_zero(const std::vector<float>& v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
}

float peak(const std::vector<float>& v) {
  float m = 0.0f;
  for (float x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_SUITE("wave_sim") {

TEST_CASE("empty phantom gives all-zero records") {
  const AcquisitionConfig cfg;
  CHECK(all_zero(simulate_sa({}, kArray, kPulse, cfg).samples));
  CHECK(all_zero(simulate_sta({}, kArray, kPulse, cfg).samples));
  CHECK(all_zero(simulate_pa({}, kArray, kPulse, cfg).samples));
}

TEST_CASE("echo onset of a scatterer at 30 mm on the centre element") {
  const AcquisitionConfig cfg;
  const auto one = make_linear_array(1, 0.220e-3, 0.044e-3);
  const auto d = simulate_sta(make_point_phantom({{0.0, 0.030, 1.0}}), one, kPulse, cfg);
  const double onset = 2.0 * 0.030 / cfg.c * cfg.fs;  // 623.4 samples
  CHECK(onset == doctest::Approx(623.38).epsilon(1e-4));
  std::size_t first = 0;
  while (first < d.n_time && d.samples[first] == 0.0f) ++first;
  CHECK((first == 623 || first == 624));
}

TEST_CASE("opposite amplitudes at one location cancel") {
  // Fused multiply-add may leave a residual at the double rounding level.
  const AcquisitionConfig cfg;
  const auto ph = make_point_phantom({{0.002, 0.04, 0.7}, {0.002, 0.04, -0.7}});
  const auto single = make_point_phantom({{0.002, 0.04, 0.7}});
  CHECK(peak(simulate_sta(ph, kArray, kPulse, cfg).samples) <=
        1e-14 * peak(simulate_sta(single, kArray, kPulse, cfg).samples));
  CHECK(peak(simulate_pa(ph, kArray, kPulse, cfg).samples) <=
        1e-14 * peak(simulate_pa(single, kArray, kPulse, cfg).samples));
}

TEST_CASE("monostatic records equal the multistatic diagonal bit for bit") {
  std::mt19937_64 rng(11);
  const AcquisitionConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const Phantom ph = random_phantom(rng, 1 + trial * 7);
    const auto sa = simulate_sa(ph, kArray, kPulse, cfg);
    const auto sta = simulate_sta(ph, kArray, kPulse, cfg);
    REQUIRE(sa.n_time == sta.n_time);
    for (std::size_t i = 0; i < kArray.size(); ++i)
      for (std::size_t k = 0; k < sa.n_time; ++k) REQUIRE(sa.at(i, k) == sta.at(i, i, k));
  }
}

TEST_CASE("channel samples match the direct echo sum") {
  std::mt19937_64 rng(5);
  const AcquisitionConfig cfg;
  const Phantom ph = random_phantom(rng, 4);
  const auto sta = simulate_sta(ph, kArray, kPulse, cfg);
  for (std::size_t t : {0u, 8u, 16u})
    for (std::size_t r : {0u, 3u, 16u}) {
      const auto ref = oracle::echo_channel(ph, kArray.element_x[t], kArray.element_x[r], 3.5e6, 1.75,
                                            true, cfg.c, cfg.fs, sta.n_time);
      for (std::size_t k = 0; k < sta.n_time; ++k)
        REQUIRE(std::abs(sta.at(t, r, k) - ref[k]) <= 1e-6 * (1.0 + std::abs(ref[k])));
    }
}

TEST_CASE("SA envelope peaks follow the round-trip distance") {
  const AcquisitionConfig cfg;
  const Point2 p{0.004, 0.035};
  const auto sa = simulate_sa(make_point_phantom({{p.x, p.z, 1.0}}), kArray, kPulse, cfg);
  for (std::size_t i = 0; i < kArray.size(); ++i) {
    const std::vector<double> ch(sa.channel(i), sa.channel(i) + sa.n_time);
    const double t_peak = static_cast<double>(oracle::envelope_argmax(ch)) / cfg.fs;
    const double arrival = t_peak - pulse_center(kPulse);
    CHECK(std::abs(arrival - 2.0 * std::hypot(p.x - kArray.element_x[i], p.z) / cfg.c) <= 1.0 / cfg.fs);
  }
}

TEST_CASE("steering delays are relative and symmetric on broadside") {
  const auto d = focusing_delays(kArray, {0.0, 0.05}, 1540.0);
  CHECK(*std::min_element(d.begin(), d.end()) == 0.0);
  for (double v : d) CHECK(v >= 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(d[d.size() - 1 - i]).epsilon(1e-12));
  const auto pa = simulate_pa({}, kArray, kPulse, AcquisitionConfig{});
  for (std::size_t l = 0; l < pa.n_lines; ++l) {
    const auto first = pa.tx_delays.begin() + static_cast<std::ptrdiff_t>(l * pa.n_tx);
    CHECK(*std::min_element(first, first + static_cast<std::ptrdiff_t>(pa.n_tx)) == 0.0);
  }
}

TEST_CASE("focused transmit adds coherently at the focal point") {
  AcquisitionConfig cfg;
  cfg.n_scan_lines = 1;
  const Phantom ph = make_point_phantom({{0.0, cfg.tx_focus_depth, 1.0}});
  const auto pa = simulate_pa(ph, kArray, kPulse, cfg);
  const std::size_t mid = kArray.size() / 2;
  const auto env = [](const float* ch, std::size_t n) {
    const std::vector<double> x(ch, ch + n);
    const auto a = oracle::dft_analytic(x);
    double m = 0.0;
    for (auto v : a) m = std::max(m, std::abs(v));
    return m;
  };
  const ArrayGeometry centre{{0.0}, kArray.pitch};
  const auto single = simulate_sta(ph, centre, centre, kPulse, cfg);
  const double one = env(single.samples.data(), single.n_time);
  const double all = env(pa.channel(0, mid), pa.n_time);
  CHECK(all >= 0.9 * static_cast<double>(kArray.size()) * one);
}

TEST_CASE("receive subsets keep every factor-th channel") {
  CHECK(subset_indices(17, 1) == std::vector<std::size_t>([] {
          std::vector<std::size_t> v(17);
          for (std::size_t i = 0; i < 17; ++i) v[i] = i;
          return v;
        }()));
  const auto two = subset_indices(64, 2);
  REQUIRE(two.size() == 32);
  for (std::size_t i = 0; i < 32; ++i) CHECK(two[i] == 2 * i);
  CHECK(subset_indices(64, 8) == std::vector<std::size_t>{0, 8, 16, 24, 32, 40, 48, 56});
  CHECK_THROWS_AS(subset_indices(64, 3), InvalidArgument);
  CHECK_THROWS_AS(subset_indices(4, 8), InvalidArgument);

  const AcquisitionConfig cfg;
  const auto ph = make_point_phantom({{0.001, 0.03, 1.0}});
  const auto sta = simulate_sta(ph, kArray, kPulse, cfg);
  const auto same = receive_subset(sta, 1);
  CHECK(same.samples == sta.samples);
  const auto half = receive_subset(sta, 2);
  REQUIRE(half.n_rx == 9);
  for (std::size_t t = 0; t < sta.n_tx; t += 5)
    for (std::size_t r = 0; r < half.n_rx; ++r)
      for (std::size_t k = 0; k < sta.n_time; k += 97) CHECK(half.at(t, r, k) == sta.at(t, 2 * r, k));
  const auto pa = simulate_pa(ph, kArray, kPulse, cfg);
  const auto pa8 = receive_subset(pa, 8);
  CHECK(pa8.n_rx == 3);
  CHECK(pa8.n_lines == pa.n_lines);
  const auto arr = subset_array(kArray, 4);
  CHECK(arr.size() == 5);
  CHECK(arr.pitch == doctest::Approx(4 * kArray.pitch));
}

TEST_CASE("simulation is linear in the phantom up to float32 storage") {
  std::mt19937_64 rng(3);
  const AcquisitionConfig cfg;
  const Phantom a = random_phantom(rng, 3), b = random_phantom(rng, 4);
  const double alpha = -1.7;
  const auto sa = simulate_sta(a, kArray, kPulse, cfg).samples;
  const auto sb = simulate_sta(b, kArray, kPulse, cfg).samples;
  const auto sc = simulate_sta(combine(a, alpha, b), kArray, kPulse, cfg).samples;
  const double scale = std::max({double(peak(sa)) * std::abs(alpha), double(peak(sb)), double(peak(sc))});
  for (std::size_t i = 0; i < sc.size(); ++i)
    REQUIRE(std::abs(sc[i] - (alpha * sa[i] + sb[i])) <= 4.0 * 1.2e-7 * scale);
}

TEST_CASE("a lateral shift by one pitch shifts the monostatic pattern by one channel") {
  const AcquisitionConfig cfg;
  const double x0 = 0.0012;
  const auto d0 = simulate_sa(make_point_phantom({{x0, 0.03, 1.0}}), kArray, kPulse, cfg);
  const auto d1 = simulate_sa(make_point_phantom({{x0 + kArray.pitch, 0.03, 1.0}}), kArray, kPulse, cfg);
  for (std::size_t i = 1; i + 1 < kArray.size(); ++i) {
    const std::vector<double> a(d0.channel(i - 1), d0.channel(i - 1) + d0.n_time);
    const std::vector<double> b(d1.channel(i), d1.channel(i) + d1.n_time);
    const auto ia = static_cast<long>(oracle::envelope_argmax(a));
    const auto ib = static_cast<long>(oracle::envelope_argmax(b));
    CHECK(std::abs(ia - ib) <= 1);
  }
}

TEST_CASE("records are deterministic and independent of the thread count") {
  std::mt19937_64 rng(9);
  const Phantom ph = random_phantom(rng, 20);
  const AcquisitionConfig cfg;
  setenv("USBF_THREADS", "1", 1);
  const auto a = simulate_pa(ph, kArray, kPulse, cfg);
  setenv("USBF_THREADS", "4", 1);
  const auto b = simulate_pa(ph, kArray, kPulse, cfg);
  unsetenv("USBF_THREADS");
  CHECK(a.samples == b.samples);
}

TEST_CASE("a scatterer beyond the recorded time window is a configuration error") {
  const AcquisitionConfig cfg;
  CHECK_THROWS_AS(simulate_sa(make_point_phantom({{0.0, 0.2, 1.0}}), kArray, kPulse, cfg), ConfigError);
}

}  // TEST_SUITE
