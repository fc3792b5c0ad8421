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
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace usbf {

/// Focused-patch dimensions: n_channels x n_time in, (2 n - 1) x n_time out.
struct PatchShape {
  std::size_t n_channels_in = 0;
  std::size_t n_channels_out = 0;
  std::size_t n_time = 0;

  std::size_t in_size() const { return n_channels_in * n_time; }
  std::size_t out_size() const { return n_channels_out * n_time; }
  void validate() const;
};

PatchShape patch_shape_for(std::size_t n_small, std::size_t n_time);

enum class LayerKind : std::uint32_t { Dense = 1, Conv2d = 2, LeakyRelu = 3, Reshape = 4 };

/// One layer of the stack. Feature maps are stored pixel-major with the
/// channel index fastest, so a single-channel map of height H (array channels)
/// and width W (time samples) has the same memory layout as an H x W patch.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  std::size_t in = 0;       // dense input features
  std::size_t out = 0;      // dense output features
  std::size_t c_in = 0;     // conv input maps
  std::size_t c_out = 0;    // conv output maps
  std::size_t height = 0;   // conv / reshape
  std::size_t width = 0;    // conv / reshape
  std::size_t kernel = 3;   // conv, odd, same padding
  double slope = 0.3;       // leaky relu
  std::size_t offset = 0;   // first parameter index (weights, then bias)

  std::size_t input_size(std::size_t prev) const;
  std::size_t output_size(std::size_t prev) const;
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  std::size_t param_count() const { return weight_count() + bias_count(); }
};

/// Layer stack with all parameters in one contiguous vector.
template <class Scalar>
struct BasicNetwork {
  std::vector<LayerSpec> layers;
  std::vector<Scalar> params;
  std::size_t input_size = 0;
  PatchShape shape;  // zero when the stack is not a patch network
  std::uint32_t task_tag = 0;  // application-defined label stored with the weights; 0 = none

  std::size_t output_size() const;
  std::size_t param_count() const { return params.size(); }
};

using Network = BasicNetwork<float>;
using NetworkF64 = BasicNetwork<double>;

template <class To, class From>
BasicNetwork<To> network_cast(const BasicNetwork<From>& net) {
  BasicNetwork<To> out;
  out.layers = net.layers;
  out.input_size = net.input_size;
  out.shape = net.shape;
  out.task_tag = net.task_tag;
  out.params.assign(net.params.begin(), net.params.end());
  return out;
}

/// Appends layers, assigning parameter offsets; used to build custom stacks.
class NetworkBuilder {
 public:
  explicit NetworkBuilder(std::size_t input_size);
  NetworkBuilder& dense(std::size_t out);
  NetworkBuilder& leaky_relu(double slope = 0.3);
  NetworkBuilder& reshape(std::size_t channels_as_height, std::size_t width);
  NetworkBuilder& conv2d(std::size_t c_out, std::size_t kernel = 3);
  template <class Scalar>
  BasicNetwork<Scalar> build() const;

 private:
  std::vector<LayerSpec> layers_;
  std::size_t input_size_;
  std::size_t current_size_;
  std::size_t current_maps_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t params_ = 0;
};

struct NetworkConfig {
  std::vector<std::size_t> dense_widths{512, 512};  // hidden dense layers before the output-sized one
  std::vector<std::size_t> conv_maps{16, 16};       // hidden conv maps; a final 1-map conv is appended
  std::size_t kernel = 3;
  double leaky_slope = 0.3;
};

/// Dense stack up to n_out * T, reshape to (n_out, T), conv stack ending in a
/// single linear map. Glorot-uniform weights, zero biases.
Network init_network(const PatchShape& shape, std::uint64_t seed, const NetworkConfig& cfg = {});

/// Fills weights with U(-sqrt(6/(fan_in+fan_out)), +...) and zeroes biases.
template <class Scalar>
void glorot_initialize(BasicNetwork<Scalar>& net, std::uint64_t seed);

/// Glorot bound for the weights of one layer.
double glorot_limit(const LayerSpec& layer);

/// Single-example inference; patch is row-major [n_in x T].
template <class Scalar>
std::vector<Scalar> forward(const BasicNetwork<Scalar>& net, std::span<const Scalar> patch);

/// Batched inference over `batch` examples stored back to back.
template <class Scalar>
std::vector<Scalar> forward_batch(const BasicNetwork<Scalar>& net, std::span<const Scalar> inputs,
                                  std::size_t batch);

template <class Scalar>
struct LossAndGrads {
  double mse = 0.0;
  std::vector<Scalar> grads;
};

/// Mean squared error over every batch element and output entry, and its
/// gradient with respect to net.params.
template <class Scalar>
LossAndGrads<Scalar> loss_and_grads(const BasicNetwork<Scalar>& net,
                                    std::span<const Scalar> batch_in,
                                    std::span<const Scalar> batch_target, std::size_t batch);

template <class Scalar>
double mse_loss(const BasicNetwork<Scalar>& net, std::span<const Scalar> batch_in,
                std::span<const Scalar> batch_target, std::size_t batch);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double base_lr = 1e-3;
  double decay = 1e-8;
  double lr_plateau = 1e-3;  // base_lr after plateau halvings
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  static TrainState fresh(std::size_t n_params, double lr, double decay);
  /// lr_plateau / (1 + decay * step) for the next update.
  double effective_lr() const;
};

/// One Adam update with time-decayed learning rate; advances state.step.
template <class Scalar>
void adam_step(std::span<Scalar> params, std::span<const Scalar> grads, TrainState& state,
               const AdamHyper& hyper = {});

/// Flat example store: inputs [n x in_size], targets [n x out_size].
struct PatchDataset {
  std::size_t in_size = 0;
  std::size_t out_size = 0;
  std::vector<float> inputs;
  std::vector<float> targets;

  std::size_t size() const { return in_size == 0 ? 0 : inputs.size() / in_size; }
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double decay = 1e-8;
  double validation_fraction = 0.1;
  int plateau_patience = 5;
  double plateau_factor = 0.5;
  double plateau_min_delta = 0.0;
  std::uint64_t seed = 1;
  AdamHyper adam;
  bool verbose = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;          // plateau learning rate used during the epoch
  bool lr_reduced = false;  // plateau rule fired at the end of the epoch
};

struct TrainResult {
  Network net;
  std::vector<EpochRecord> history;
  TrainState state;
};

/// Mini-batch Adam with a shuffled 90/10 train/validation split (by seed) and
/// the reduce-on-plateau schedule.
TrainResult train(Network net, const PatchDataset& data, const TrainConfig& cfg);

std::string history_csv(const std::vector<EpochRecord>& history);

void save_weights(const Network& net, const std::filesystem::path& path);
Network load_weights(const std::filesystem::path& path);

}  // namespace usbf
