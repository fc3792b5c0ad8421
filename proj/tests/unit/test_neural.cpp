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
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "usbf/errors.hpp"
#include "usbf/neural.hpp"

using namespace usbf;

namespace {

std::vector<double> randn(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("usbf_test_" + name);
}

const PatchShape kSmallShape{3, 5, 8};

Network small_patch_network(std::uint64_t seed) {
  return init_network(kSmallShape, seed, NetworkConfig{{24, 20}, {8, 4}, 3, 0.3});
}

}  // namespace

TEST_SUITE("neural") {

TEST_CASE("initialisation is deterministic and bounded by the Glorot limit") {
  const Network a = init_network(patch_shape_for(17, 32), 5);
  const Network b = init_network(patch_shape_for(17, 32), 5);
  CHECK(a.params == b.params);
  CHECK(a.params != init_network(patch_shape_for(17, 32), 6).params);

  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& L : a.layers) {
    if (L.param_count() == 0) continue;
    const double lim = glorot_limit(L);
    for (std::size_t i = 0; i < L.weight_count(); ++i) {
      const double w = a.params[L.offset + i];
      CHECK_MESSAGE(std::abs(w) <= lim, "layer offset " << L.offset);
      sum += w / lim;
      sum2 += (w / lim) * (w / lim);
      ++n;
    }
    for (std::size_t i = 0; i < L.bias_count(); ++i) CHECK(a.params[L.offset + L.weight_count() + i] == 0.0f);
  }
  REQUIRE(n >= 10000);
  // Scaled weights are U(-1, 1): mean 0, variance 1/3.
  const double sigma = std::sqrt(1.0 / 3.0 / static_cast<double>(n));
  CHECK(std::abs(sum / static_cast<double>(n)) < 3.0 * sigma);
  CHECK(sum2 / static_cast<double>(n) == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("the standard stack has six weighted layers ending in a linear single-map convolution") {
  const Network net = init_network(patch_shape_for(17, 32), 1);
  std::size_t weighted = 0, dense = 0, conv = 0;
  for (const auto& L : net.layers) {
    if (L.kind == LayerKind::Dense) ++dense;
    if (L.kind == LayerKind::Conv2d) ++conv;
    weighted += L.param_count() > 0;
  }
  CHECK(weighted == 6);
  CHECK(dense == 3);
  CHECK(conv == 3);
  CHECK(net.layers.back().kind == LayerKind::Conv2d);
  CHECK(net.layers.back().c_out == 1);
  CHECK(net.input_size == 17 * 32);
  CHECK(net.output_size() == 33 * 32);
}

TEST_CASE("forward pass identities") {
  SUBCASE("zero input with zero biases") {
    const Network net = small_patch_network(3);
    const std::vector<float> zero(kSmallShape.in_size(), 0.0f);
    for (float v : forward<float>(net, zero)) CHECK(v == 0.0f);
  }
  SUBCASE("identity dense layer") {
    auto net = NetworkBuilder(4).dense(4).build<double>();
    std::fill(net.params.begin(), net.params.end(), 0.0);
    for (std::size_t i = 0; i < 4; ++i) net.params[i * 4 + i] = 1.0;
    const std::vector<double> x{1.5, -2.0, 0.25, 7.0};
    CHECK(forward<double>(net, x) == x);
  }
  SUBCASE("repeatable and batch-consistent") {
    Network net = small_patch_network(9);
    std::mt19937_64 rng(1);
    for (float& p : net.params) p += 0.01f * static_cast<float>(randn(rng, 1)[0]);
    const auto xd = randn(rng, 4 * kSmallShape.in_size());
    const std::vector<float> x(xd.begin(), xd.end());
    const auto y1 = forward_batch<float>(net, x, 4);
    CHECK(y1 == forward_batch<float>(net, x, 4));
    const std::span<const float> second(x.data() + kSmallShape.in_size(), kSmallShape.in_size());
    const auto single = forward<float>(net, second);
    for (std::size_t i = 0; i < single.size(); ++i)
      CHECK(single[i] == doctest::Approx(y1[kSmallShape.out_size() + i]).epsilon(1e-5));
  }
  SUBCASE("shape mismatch") {
    const Network net = small_patch_network(1);
    const std::vector<float> wrong(kSmallShape.in_size() + 1, 0.0f);
    CHECK_THROWS_AS(forward<float>(net, wrong), InvalidArgument);
  }
}

TEST_CASE("loss and gradients by hand") {
  auto net = NetworkBuilder(1).dense(1).build<double>();
  net.params = {3.0, 0.0};
  const std::vector<double> x{1.0}, t{0.0};
  const auto lg = loss_and_grads<double>(net, x, t, 1);
  CHECK(lg.mse == 9.0);
  CHECK(lg.grads[0] == 6.0);

  std::mt19937_64 rng(2);
  auto m = network_cast<double>(small_patch_network(4));
  const auto in = randn(rng, 2 * kSmallShape.in_size());
  const auto out = forward_batch<double>(m, in, 2);
  const auto zero = loss_and_grads<double>(m, in, out, 2);
  CHECK(zero.mse == 0.0);
  for (double g : zero.grads) CHECK(g == 0.0);
}

TEST_CASE("backprop matches central finite differences for every layer kind") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto net = oracle::random_mixed_network(seed);
    std::mt19937_64 rng(100 + seed);
    const std::size_t batch = 3;
    const auto in = randn(rng, batch * net.input_size);
    const auto tgt = randn(rng, batch * net.output_size());
    CHECK_MESSAGE(oracle::gradient_check(net, in, tgt, batch) < 1e-4, "seed " << seed);
  }
  // The full patch topology in double, shrunk.
  auto net = network_cast<double>(small_patch_network(8));
  std::mt19937_64 rng(8);
  for (double& p : net.params) p += 0.05 * randn(rng, 1)[0];
  const auto in = randn(rng, 2 * net.input_size);
  const auto tgt = randn(rng, 2 * net.output_size());
  CHECK(oracle::gradient_check(net, in, tgt, 2) < 1e-4);
}

TEST_CASE("Adam update rules") {
  SUBCASE("first step moves by the learning rate") {
    std::vector<double> p{0.5, -0.5};
    const std::vector<double> g{1.0, 1.0};
    auto st = TrainState::fresh(2, 1e-3, 0.0);
    adam_step<double>(p, g, st);
    CHECK(p[0] - 0.5 == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(st.step == 1);
  }
  SUBCASE("zero gradient leaves parameters alone") {
    std::vector<double> p{0.5, -0.5};
    const std::vector<double> g{0.0, 0.0};
    auto st = TrainState::fresh(2, 1e-3, 1e-8);
    adam_step<double>(p, g, st);
    CHECK(p == std::vector<double>{0.5, -0.5});
  }
  SUBCASE("first step is invariant to gradient scale") {
    std::vector<double> p1{1.0}, p2{1.0};
    auto s1 = TrainState::fresh(1, 1e-3, 0.0), s2 = TrainState::fresh(1, 1e-3, 0.0);
    adam_step<double>(p1, std::vector<double>{0.3}, s1);
    adam_step<double>(p2, std::vector<double>{0.6}, s2);
    const double d1 = p1[0] - 1.0, d2 = p2[0] - 1.0;
    CHECK(std::abs(d2 - d1) < 1e-6 * std::abs(d1));
  }
  SUBCASE("minimises a parabola") {
    std::vector<double> th{1.0};
    auto st = TrainState::fresh(1, 1e-3, 1e-8);
    double prev = 1.0;
    for (int i = 0; i < 100; ++i) {
      adam_step<double>(th, std::vector<double>{2.0 * th[0]}, st);
      CHECK(std::abs(th[0]) < prev);
      prev = std::abs(th[0]);
    }
    CHECK(std::abs(th[0]) < 0.95);
  }
  SUBCASE("time decay") {
    auto st = TrainState::fresh(1, 1e-3, 0.5);
    st.step = 2;
    CHECK(st.effective_lr() == doctest::Approx(1e-3 / 2.0));
  }
}

TEST_CASE("training") {
  std::mt19937_64 rng(6);
  PatchDataset ds;
  ds.in_size = kSmallShape.in_size();
  ds.out_size = kSmallShape.out_size();
  const auto xi = randn(rng, 40 * ds.in_size), xt = randn(rng, 40 * ds.out_size, 0.5);
  ds.inputs.assign(xi.begin(), xi.end());
  ds.targets.assign(xt.begin(), xt.end());
  TrainConfig tc;
  tc.epochs = 6;
  tc.batch_size = 8;
  tc.seed = 3;

  SUBCASE("history and determinism") {
    const auto a = train(small_patch_network(1), ds, tc);
    const auto b = train(small_patch_network(1), ds, tc);
    REQUIRE(a.history.size() == 6);
    for (std::size_t e = 0; e < 6; ++e) {
      CHECK(a.history[e].epoch == e + 1);
      CHECK(a.history[e].train_loss == b.history[e].train_loss);
      CHECK(a.history[e].val_loss == b.history[e].val_loss);
    }
    CHECK(a.net.params == b.net.params);
    const std::string csv = history_csv(a.history);
    CHECK(csv.rfind("epoch,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  }
  SUBCASE("plateau rule halves the rate") {
    tc.learning_rate = 0.0;
    tc.plateau_patience = 2;
    const auto r = train(small_patch_network(1), ds, tc);
    CHECK(r.history[0].lr == 0.0);
    bool fired = false;
    for (const auto& h : r.history) fired = fired || h.lr_reduced;
    CHECK(fired);
  }
  SUBCASE("empty data") {
    CHECK_THROWS_AS(train(small_patch_network(1), PatchDataset{ds.in_size, ds.out_size, {}, {}}, tc), InvalidArgument);
  }
}

TEST_CASE("memorises a handful of pairs") {
  std::mt19937_64 rng(12);
  auto net = NetworkBuilder(6).dense(64).leaky_relu(0.3).dense(64).leaky_relu(0.3).dense(6).build<float>();
  glorot_initialize(net, 12);
  PatchDataset ds{6, 6, {}, {}};
  const auto xi = randn(rng, 8 * 6), xt = randn(rng, 8 * 6);
  ds.inputs.assign(xi.begin(), xi.end());
  ds.targets.assign(xt.begin(), xt.end());
  TrainConfig tc;
  tc.epochs = 2000;
  tc.batch_size = 8;
  tc.plateau_patience = 1 << 30;  // the single held-out pair would otherwise throttle the rate
  const auto r = train(net, ds, tc);
  CHECK(r.history.back().train_loss < 1e-4 * r.history.front().train_loss);
}

TEST_CASE("weights files") {
  Network net = small_patch_network(21);
  net.task_tag = 7;
  std::mt19937_64 rng(3);
  for (float& p : net.params) p += 0.1f * static_cast<float>(randn(rng, 1)[0]);
  const auto path = temp_file("weights.usbf");
  save_weights(net, path);

  SUBCASE("round trip") {
    const Network back = load_weights(path);
    CHECK(back.params == net.params);
    CHECK(back.task_tag == 7);
    CHECK(back.shape.n_channels_out == kSmallShape.n_channels_out);
    const auto xd = randn(rng, kSmallShape.in_size());
    const std::vector<float> x(xd.begin(), xd.end());
    CHECK(forward<float>(back, x) == forward<float>(net, x));
  }
  SUBCASE("truncated") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 5);
    CHECK_THROWS_AS(load_weights(path), FormatError);
  }
  SUBCASE("unknown version") {
    {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(4);
      const char v[4] = {9, 0, 0, 0};
      f.write(v, 4);
    }
    CHECK_THROWS_AS(load_weights(path), UnsupportedVersion);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_weights(temp_file("does_not_exist.usbf")), IoError);
  }
  std::filesystem::remove(path);
}

}  // TEST_SUITE
