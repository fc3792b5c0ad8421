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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace oracle {

std::vector<std::complex<double>> dft_analytic(const std::vector<double>& x) {
  std::size_t n = 1;
  while (n < x.size()) n <<= 1;
  std::vector<std::complex<double>> X(n);
  const double w = -2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
      acc += x[j] * std::polar(1.0, w * static_cast<double>((k * j) % n));
    X[k] = acc;
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (2 * k < n) X[k] *= 2.0;
    else if (2 * k > n) X[k] = 0.0;
  }
  std::vector<std::complex<double>> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += X[k] * std::polar(1.0, -w * static_cast<double>((k * j) % n));
    out[j] = acc / static_cast<double>(n);
  }
  return out;
}

double burst(double t, double f0, double n_cycles, bool hann) {
  const double dur = n_cycles / f0;
  if (t < 0.0 || t > dur) return 0.0;
  const double s = std::sin(2.0 * std::numbers::pi * f0 * t);
  return hann ? 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / dur)) * s : s;
}

std::vector<double> echo_channel(const usbf::Phantom& ph, double x_tx, double x_rx, double f0,
                                 double n_cycles, bool hann, double c, double fs,
                                 std::size_t n_time) {
  std::vector<double> out(n_time, 0.0);
  for (const auto& s : ph.scatterers) {
    const double tau = (std::hypot(s.x - x_tx, s.z) + std::hypot(s.x - x_rx, s.z)) / c;
    for (std::size_t k = 0; k < n_time; ++k)
      out[k] += s.amplitude * burst(static_cast<double>(k) / fs - tau, f0, n_cycles, hann);
  }
  return out;
}

std::size_t envelope_argmax(const std::vector<double>& x) {
  const auto a = dft_analytic(x);
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.size(); ++i)
    if (std::abs(a[i]) > std::abs(a[best])) best = i;
  return best;
}

std::vector<double> naive_das_sa(const std::vector<std::vector<double>>& channels,
                                 const std::vector<double>& element_x, double c, double fs,
                                 double echo_delay, const usbf::SectorGrid& grid) {
  std::vector<std::vector<std::complex<double>>> a;
  for (const auto& ch : channels) a.push_back(dft_analytic(ch));
  std::vector<double> img(grid.angles.size() * grid.depths.size());
  for (std::size_t l = 0; l < grid.angles.size(); ++l)
    for (std::size_t d = 0; d < grid.depths.size(); ++d) {
      const double px = grid.depths[d] * std::sin(grid.angles[l]);
      const double pz = grid.depths[d] * std::cos(grid.angles[l]);
      std::complex<double> sum = 0.0;
      for (std::size_t i = 0; i < element_x.size(); ++i) {
        const double u = (2.0 * std::hypot(px - element_x[i], pz) / c + echo_delay) * fs;
        const auto k = static_cast<std::ptrdiff_t>(std::floor(u));
        if (k < 0 || k + 1 >= static_cast<std::ptrdiff_t>(a[i].size())) continue;
        const double f = u - static_cast<double>(k);
        sum += (1.0 - f) * a[i][static_cast<std::size_t>(k)] + f * a[i][static_cast<std::size_t>(k + 1)];
      }
      img[l * grid.depths.size() + d] = std::abs(sum);
    }
  return img;
}

std::vector<double> gaussian(const std::vector<double>& x, double sigma) {
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(),
                 [sigma](double v) { return std::exp(-v * v / (2.0 * sigma * sigma)); });
  return y;
}

namespace {

// Signs of every LeakyReLU input, batch included.
std::vector<bool> kink_signs(const usbf::NetworkF64& net, const std::vector<double>& in, std::size_t batch) {
  std::vector<bool> signs;
  usbf::NetworkF64 prefix = net;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    if (net.layers[li].kind != usbf::LayerKind::LeakyRelu) continue;
    prefix.layers.assign(net.layers.begin(), net.layers.begin() + static_cast<std::ptrdiff_t>(li));
    for (double v : usbf::forward_batch<double>(prefix, in, batch)) signs.push_back(v > 0.0);
  }
  return signs;
}

}  // namespace

double gradient_check(const usbf::NetworkF64& net, const std::vector<double>& in,
                      const std::vector<double>& target, std::size_t batch, double h, double floor) {
  const auto analytic = usbf::loss_and_grads<double>(net, in, target, batch).grads;
  const auto signs = kink_signs(net, in, batch);
  usbf::NetworkF64 probe = net;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    const double p = net.params[i];
    double step = h, up = 0.0, down = 0.0;
    for (int attempt = 0; attempt < 3; ++attempt, step /= 10.0) {
      probe.params[i] = p + step;
      const bool smooth_up = kink_signs(probe, in, batch) == signs;
      up = usbf::mse_loss<double>(probe, in, target, batch);
      probe.params[i] = p - step;
      const bool smooth_down = kink_signs(probe, in, batch) == signs;
      down = usbf::mse_loss<double>(probe, in, target, batch);
      if (smooth_up && smooth_down) break;
    }
    probe.params[i] = p;
    const double fd = (up - down) / (2.0 * step);
    const double scale = std::max({std::abs(analytic[i]), std::abs(fd), floor});
    worst = std::max(worst, std::abs(analytic[i] - fd) / scale);
  }
  return worst;
}

usbf::NetworkF64 random_mixed_network(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1);
  const std::size_t h = 3 + static_cast<std::size_t>(coin(rng)), w = 5;
  usbf::NetworkBuilder b(7);
  b.dense(10).leaky_relu(0.3).dense(h * w).reshape(h, w);
  b.conv2d(8, 3).leaky_relu(0.3);
  if (coin(rng)) b.conv2d(16, 3).leaky_relu(0.2).conv2d(3, 1);
  else b.conv2d(3, 3).leaky_relu(0.3);
  b.conv2d(1, 3);
  auto net = b.build<double>();
  std::normal_distribution<double> g(0.0, 0.5);
  for (double& p : net.params) p = g(rng);
  return net;
}

}  // namespace oracle
