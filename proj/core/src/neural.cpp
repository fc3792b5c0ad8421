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

#include "usbf/neural.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "usbf/errors.hpp"
#include "usbf/tensor_io.hpp"

namespace usbf {
namespace {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MapM = Eigen::Map<Mat<S>>;
template <class S>
using CMapM = Eigen::Map<const Mat<S>>;
template <class S>
using CMapV = Eigen::Map<const Vec<S>>;

constexpr float kWeightsTag = 1.0f;

// "Same" convolution as one GEMM per kernel tap. A chunk of images is stored
// zero-padded and back to back, pixel-major with the channel fastest, so each
// tap becomes a constant column shift; the padding keeps images apart and the
// values computed at padding positions are discarded.
constexpr std::size_t kConvChunk = 8;

struct ConvGeom {
  std::size_t H, W, Hp, Wp, k;
  std::size_t img;  // padded pixels per image
  ConvGeom(const LayerSpec& L)
      : H(L.height), W(L.width), Hp(L.height + L.kernel - 1), Wp(L.width + L.kernel - 1),
        k(L.kernel), img((L.height + L.kernel - 1) * (L.width + L.kernel - 1)) {}
  std::ptrdiff_t tap_shift(std::size_t tap) const {
    const auto p = static_cast<std::ptrdiff_t>(k / 2);
    return (static_cast<std::ptrdiff_t>(tap / k) - p) * static_cast<std::ptrdiff_t>(Wp) +
           static_cast<std::ptrdiff_t>(tap % k) - p;
  }
  std::size_t first() const { return (k / 2) * Wp + k / 2; }
  std::size_t span(std::size_t nb) const { return nb * img - 2 * first(); }
};

template <class S>
void pad_images(const ConvGeom& g, std::size_t C, const S* x, std::size_t nb, S* xp) {
  std::fill_n(xp, nb * g.img * C, S(0));
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t h = 0; h < g.H; ++h)
      std::copy_n(x + (b * g.H + h) * g.W * C, g.W * C,
                  xp + (b * g.img + (h + g.k / 2) * g.Wp + g.k / 2) * C);
}

template <class S>
void unpad_images(const ConvGeom& g, std::size_t C, const S* xp, std::size_t nb, S* x) {
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t h = 0; h < g.H; ++h)
      std::copy_n(xp + (b * g.img + (h + g.k / 2) * g.Wp + g.k / 2) * C, g.W * C,
                  x + (b * g.H + h) * g.W * C);
}

// out[q] = bias + sum_tap W_tap * in[q + shift_tap] for q in [q0, q0 + n), with
// CO output channels held in registers across a block of pixels. W_tap is
// laid out [ci][co] with co fastest.
template <class S, int CO>
void shifted_conv_kernel(std::size_t C, const S* in, const S* W, const S* bias,
                         std::span<const std::ptrdiff_t> shifts, std::size_t q0, std::size_t n,
                         S* out) {
  using Vec = Eigen::Array<S, CO, 1>;
  using CVecMap = Eigen::Map<const Vec, Eigen::Unaligned>;
  constexpr std::size_t PX = 8;
  const std::size_t taps = shifts.size();
  const Vec b0 = bias ? Vec(CVecMap(bias)) : Vec(Vec::Zero());
  const auto Cs = static_cast<std::ptrdiff_t>(C);
  std::size_t q = q0;
  const std::size_t end = q0 + n;
  for (; q + PX <= end; q += PX) {
    Vec acc[PX];
    for (auto& a : acc) a = b0;
    for (std::size_t t = 0; t < taps; ++t) {
      const S* wt = W + t * C * CO;
      const S* src = in + (static_cast<std::ptrdiff_t>(q) + shifts[t]) * Cs;
      for (std::size_t ci = 0; ci < C; ++ci) {
        const Vec w = CVecMap(wt + ci * CO);
        for (std::size_t p = 0; p < PX; ++p) acc[p] += w * src[p * C + ci];
      }
    }
    for (std::size_t p = 0; p < PX; ++p)
      Eigen::Map<Vec, Eigen::Unaligned>(out + (q + p) * CO) = acc[p];
  }
  for (; q < end; ++q) {
    Vec acc = b0;
    for (std::size_t t = 0; t < taps; ++t) {
      const S* wt = W + t * C * CO;
      const S* src = in + (static_cast<std::ptrdiff_t>(q) + shifts[t]) * Cs;
      for (std::size_t ci = 0; ci < C; ++ci) acc += CVecMap(wt + ci * CO) * src[ci];
    }
    Eigen::Map<Vec, Eigen::Unaligned>(out + q * CO) = acc;
  }
}

// Single output channel: vectorise over the CI input channels instead.
template <class S, int CI>
void shifted_conv_single(const S* in, const S* W, const S* bias,
                         std::span<const std::ptrdiff_t> shifts, std::size_t q0, std::size_t n,
                         S* out) {
  using Vec = Eigen::Array<S, CI, 1>;
  using CVecMap = Eigen::Map<const Vec, Eigen::Unaligned>;
  const S b0 = bias ? bias[0] : S(0);
  for (std::size_t q = q0; q < q0 + n; ++q) {
    Vec acc = Vec::Zero();
    for (std::size_t t = 0; t < shifts.size(); ++t)
      acc += CVecMap(W + t * CI) *
             CVecMap(in + (static_cast<std::ptrdiff_t>(q) + shifts[t]) * CI);
    out[q] = b0 + acc.sum();
  }
}

// Same contract as the kernel above for any channel count, through Eigen.
template <class S>
void shifted_conv_gemm(std::size_t C, std::size_t CO, const S* in, std::size_t P, const S* W,
                       const S* bias, std::span<const std::ptrdiff_t> shifts, std::size_t q0,
                       std::size_t n, S* out) {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  const auto Ci = static_cast<Eigen::Index>(C), Co = static_cast<Eigen::Index>(CO);
  const auto Pi = static_cast<Eigen::Index>(P);
  Eigen::Map<const Mat> X(in, Ci, Pi);
  Eigen::Map<Mat> Y(out, Co, Pi);
  auto blk = Y.middleCols(static_cast<Eigen::Index>(q0), static_cast<Eigen::Index>(n));
  if (bias)
    blk.colwise() = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(bias, Co);
  else
    blk.setZero();
  for (std::size_t t = 0; t < shifts.size(); ++t) {
    Eigen::Map<const Mat> Wt(W + t * C * CO, Co, Ci);
    blk.noalias() +=
        Wt * X.middleCols(static_cast<Eigen::Index>(q0) + shifts[t], static_cast<Eigen::Index>(n));
  }
}

template <class S>
void shifted_conv(std::size_t C, std::size_t CO, const S* in, std::size_t P, const S* W,
                  const S* bias, std::span<const std::ptrdiff_t> shifts, std::size_t q0,
                  std::size_t n, S* out) {
  switch (CO) {
    case 8: shifted_conv_kernel<S, 8>(C, in, W, bias, shifts, q0, n, out); return;
    case 16: shifted_conv_kernel<S, 16>(C, in, W, bias, shifts, q0, n, out); return;
    case 32: shifted_conv_kernel<S, 32>(C, in, W, bias, shifts, q0, n, out); return;
    case 1:
      if (C == 8) return shifted_conv_single<S, 8>(in, W, bias, shifts, q0, n, out);
      if (C == 16) return shifted_conv_single<S, 16>(in, W, bias, shifts, q0, n, out);
      if (C == 32) return shifted_conv_single<S, 32>(in, W, bias, shifts, q0, n, out);
      [[fallthrough]];
    default: shifted_conv_gemm(C, CO, in, P, W, bias, shifts, q0, n, out);
  }
}

template <class S>
void conv_forward(const LayerSpec& L, const S* K, const S* bias, const S* x, std::size_t batch,
                  S* y) {
  const ConvGeom g(L);
  std::vector<std::ptrdiff_t> shifts(g.k * g.k);
  for (std::size_t t = 0; t < shifts.size(); ++t) shifts[t] = g.tap_shift(t);
  thread_local std::vector<S> xp, yp;
  for (std::size_t b0 = 0; b0 < batch; b0 += kConvChunk) {
    const std::size_t nb = std::min(kConvChunk, batch - b0);
    const std::size_t P = nb * g.img;
    xp.resize(P * L.c_in);
    yp.resize(P * L.c_out);
    pad_images(g, L.c_in, x + b0 * g.H * g.W * L.c_in, nb, xp.data());
    shifted_conv(L.c_in, L.c_out, xp.data(), P, K, bias, shifts, g.first(), g.span(nb), yp.data());
    unpad_images(g, L.c_out, yp.data(), nb, y + b0 * g.H * g.W * L.c_out);
  }
}

// Accumulates dK and dbias; writes dx when non-null. The input gradient is a
// convolution of dy with the transposed kernel at negated shifts.
template <class S>
void conv_backward(const LayerSpec& L, const S* K, const S* x, const S* dy, std::size_t batch,
                   S* dx, S* dK, S* dbias) {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  const ConvGeom g(L);
  const std::size_t C = L.c_in, Co = L.c_out, taps = g.k * g.k;
  std::vector<std::ptrdiff_t> back(taps);
  std::vector<S> Kt(taps * C * Co);
  for (std::size_t t = 0; t < taps; ++t) {
    back[t] = -g.tap_shift(t);
    for (std::size_t ci = 0; ci < C; ++ci)
      for (std::size_t co = 0; co < Co; ++co)
        Kt[(t * Co + co) * C + ci] = K[(t * C + ci) * Co + co];
  }
  Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> db(dbias, static_cast<Eigen::Index>(Co));
  thread_local std::vector<S> xp, gp, dxp;
  for (std::size_t b0 = 0; b0 < batch; b0 += kConvChunk) {
    const std::size_t nb = std::min(kConvChunk, batch - b0);
    const std::size_t P = nb * g.img;
    xp.resize(P * C);
    gp.resize(P * Co);
    pad_images(g, C, x + b0 * g.H * g.W * C, nb, xp.data());
    pad_images(g, Co, dy + b0 * g.H * g.W * Co, nb, gp.data());
    const auto q0 = static_cast<Eigen::Index>(g.first());
    const auto n = static_cast<Eigen::Index>(g.span(nb));
    Eigen::Map<const Mat> X(xp.data(), static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(P));
    Eigen::Map<const Mat> Gm(gp.data(), static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(P));
    const auto G = Gm.middleCols(q0, n);
    for (Eigen::Index q = 0; q < n; ++q) db += G.col(q);
    for (std::size_t t = 0; t < taps; ++t) {
      Eigen::Map<Mat> dKt(dK + t * C * Co, static_cast<Eigen::Index>(Co), static_cast<Eigen::Index>(C));
      dKt.noalias() += G * X.middleCols(q0 + g.tap_shift(t), n).transpose();
    }
    if (dx) {
      dxp.resize(P * C);
      shifted_conv<S>(Co, C, gp.data(), P, Kt.data(), nullptr, back, g.first(), g.span(nb),
                      dxp.data());
      unpad_images(g, C, dxp.data(), nb, dx + b0 * g.H * g.W * C);
    }
  }
}

template <class S>
void layer_forward(const LayerSpec& L, const S* params, const S* x, std::size_t in_size, S* y,
                   std::size_t batch) {
  switch (L.kind) {
    case LayerKind::Dense: {
      CMapM<S> X(x, static_cast<Eigen::Index>(L.in), static_cast<Eigen::Index>(batch));
      CMapM<S> Wt(params + L.offset, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in));
      CMapV<S> bias(params + L.offset + L.weight_count(), static_cast<Eigen::Index>(L.out));
      MapM<S> Y(y, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(batch));
      Y.noalias() = Wt * X;
      Y.colwise() += bias;
      break;
    }
    case LayerKind::Conv2d:
      conv_forward(L, params + L.offset, params + L.offset + L.weight_count(), x, batch, y);
      break;
    case LayerKind::LeakyRelu: {
      const S slope = static_cast<S>(L.slope);
      for (std::size_t i = 0; i < in_size * batch; ++i) y[i] = x[i] > S(0) ? x[i] : slope * x[i];
      break;
    }
    case LayerKind::Reshape:
      std::copy_n(x, in_size * batch, y);
      break;
  }
}

// Returns dx (when wanted) and accumulates parameter gradients into grads.
template <class S>
void layer_backward(const LayerSpec& L, const S* params, const S* x, std::size_t in_size,
                    const S* dy, std::size_t batch, S* dx, S* grads) {
  switch (L.kind) {
    case LayerKind::Dense: {
      const auto in = static_cast<Eigen::Index>(L.in), out = static_cast<Eigen::Index>(L.out);
      const auto B = static_cast<Eigen::Index>(batch);
      CMapM<S> X(x, in, B);
      CMapM<S> dY(dy, out, B);
      MapM<S> dW(grads + L.offset, out, in);
      Eigen::Map<Vec<S>> db(grads + L.offset + L.weight_count(), out);
      dW.noalias() += dY * X.transpose();
      // Column by column so the summation order does not depend on buffer alignment.
      for (Eigen::Index b = 0; b < B; ++b) db += dY.col(b);
      if (dx) {
        CMapM<S> Wt(params + L.offset, out, in);
        MapM<S> dX(dx, in, B);
        dX.noalias() = Wt.transpose() * dY;
      }
      break;
    }
    case LayerKind::Conv2d:
      conv_backward(L, params + L.offset, x, dy, batch, dx, grads + L.offset,
                    grads + L.offset + L.weight_count());
      break;
    case LayerKind::LeakyRelu: {
      if (!dx) break;
      const S slope = static_cast<S>(L.slope);
      for (std::size_t i = 0; i < in_size * batch; ++i) dx[i] = x[i] > S(0) ? dy[i] : slope * dy[i];
      break;
    }
    case LayerKind::Reshape:
      if (dx) std::copy_n(dy, in_size * batch, dx);
      break;
  }
}

template <class S>
std::vector<std::size_t> layer_sizes(const BasicNetwork<S>& net) {
  std::vector<std::size_t> sizes{net.input_size};
  for (const auto& L : net.layers) sizes.push_back(L.output_size(sizes.back()));
  return sizes;
}

template <class S>
void check_batch(const BasicNetwork<S>& net, std::size_t n_in, std::size_t batch) {
  if (batch == 0) throw InvalidArgument("empty batch");
  if (n_in != net.input_size * batch)
    throw InvalidArgument("input size " + std::to_string(n_in) + " does not match network input " +
                          std::to_string(net.input_size) + " x batch " + std::to_string(batch));
}

// Buffers reused across training steps; large per-step allocations otherwise
// dominate the step time through page faults.
template <class S>
struct Workspace {
  std::vector<std::vector<S>> acts;  // acts[0] is the input
  std::vector<S> dy, dx, grads;
};

template <class S>
void forward_all(const BasicNetwork<S>& net, std::span<const S> in, std::size_t batch,
                 Workspace<S>& ws) {
  const auto sizes = layer_sizes(net);
  ws.acts.resize(net.layers.size() + 1);
  ws.acts[0].assign(in.begin(), in.end());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    ws.acts[i + 1].resize(sizes[i + 1] * batch);
    layer_forward(net.layers[i], net.params.data(), ws.acts[i].data(), sizes[i],
                  ws.acts[i + 1].data(), batch);
  }
}

// Mean squared error of one batch; parameter gradients land in ws.grads.
template <class S>
double loss_and_grads_into(const BasicNetwork<S>& net, std::span<const S> batch_in,
                           std::span<const S> batch_target, std::size_t batch, Workspace<S>& ws) {
  check_batch(net, batch_in.size(), batch);
  const std::size_t n_out = net.output_size();
  if (batch_target.size() != n_out * batch) throw InvalidArgument("target batch shape mismatch");

  const auto sizes = layer_sizes(net);
  forward_all(net, batch_in, batch, ws);
  const auto& pred = ws.acts.back();

  ws.grads.assign(net.params.size(), S(0));
  const double denom = static_cast<double>(n_out * batch);
  ws.dy.resize(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(batch_target[i]);
    sum += d * d;
    ws.dy[i] = static_cast<S>(2.0 * d / denom);
  }

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const bool need_dx = li > 0;
    if (need_dx) ws.dx.resize(sizes[li] * batch);
    layer_backward(net.layers[li], net.params.data(), ws.acts[li].data(), sizes[li], ws.dy.data(),
                   batch, need_dx ? ws.dx.data() : nullptr, ws.grads.data());
    if (need_dx) std::swap(ws.dy, ws.dx);
  }
  return sum / denom;
}

}  // namespace

void PatchShape::validate() const {
  if (n_channels_in == 0 || n_time == 0) throw InvalidArgument("patch shape must be non-empty");
  if (n_channels_out != 2 * n_channels_in - 1)
    throw InvalidArgument("patch output channels must equal 2 * input channels - 1");
}

PatchShape patch_shape_for(std::size_t n_small, std::size_t n_time) {
  PatchShape s{n_small, 2 * n_small - 1, n_time};
  s.validate();
  return s;
}

std::size_t LayerSpec::input_size(std::size_t prev) const {
  switch (kind) {
    case LayerKind::Dense: return in;
    case LayerKind::Conv2d: return c_in * height * width;
    default: return prev;
  }
}

std::size_t LayerSpec::output_size(std::size_t prev) const {
  switch (kind) {
    case LayerKind::Dense: return out;
    case LayerKind::Conv2d: return c_out * height * width;
    default: return prev;
  }
}

std::size_t LayerSpec::weight_count() const {
  switch (kind) {
    case LayerKind::Dense: return in * out;
    case LayerKind::Conv2d: return c_out * c_in * kernel * kernel;
    default: return 0;
  }
}

std::size_t LayerSpec::bias_count() const {
  switch (kind) {
    case LayerKind::Dense: return out;
    case LayerKind::Conv2d: return c_out;
    default: return 0;
  }
}

template <class S>
std::size_t BasicNetwork<S>::output_size() const {
  std::size_t s = input_size;
  for (const auto& L : layers) s = L.output_size(s);
  return s;
}

NetworkBuilder::NetworkBuilder(std::size_t input_size)
    : input_size_(input_size), current_size_(input_size) {
  if (input_size == 0) throw InvalidArgument("network input size must be positive");
}

NetworkBuilder& NetworkBuilder::dense(std::size_t out) {
  if (out == 0) throw InvalidArgument("dense layer width must be positive");
  LayerSpec L;
  L.kind = LayerKind::Dense;
  L.in = current_size_;
  L.out = out;
  L.offset = params_;
  params_ += L.param_count();
  layers_.push_back(L);
  current_size_ = out;
  current_maps_ = 0;
  return *this;
}

NetworkBuilder& NetworkBuilder::leaky_relu(double slope) {
  LayerSpec L;
  L.kind = LayerKind::LeakyRelu;
  L.slope = slope;
  L.offset = params_;
  layers_.push_back(L);
  return *this;
}

NetworkBuilder& NetworkBuilder::reshape(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || current_size_ % (height * width) != 0)
    throw InvalidArgument("reshape does not divide the current activation size");
  LayerSpec L;
  L.kind = LayerKind::Reshape;
  L.height = height;
  L.width = width;
  L.c_in = current_size_ / (height * width);
  L.c_out = L.c_in;
  L.offset = params_;
  layers_.push_back(L);
  height_ = height;
  width_ = width;
  current_maps_ = L.c_in;
  return *this;
}

NetworkBuilder& NetworkBuilder::conv2d(std::size_t c_out, std::size_t kernel) {
  if (current_maps_ == 0) throw InvalidArgument("conv2d needs a preceding reshape or conv2d");
  if (kernel % 2 == 0) throw InvalidArgument("conv kernel must be odd");
  if (c_out == 0) throw InvalidArgument("conv2d needs at least one output map");
  LayerSpec L;
  L.kind = LayerKind::Conv2d;
  L.c_in = current_maps_;
  L.c_out = c_out;
  L.height = height_;
  L.width = width_;
  L.kernel = kernel;
  L.offset = params_;
  params_ += L.param_count();
  layers_.push_back(L);
  current_maps_ = c_out;
  current_size_ = c_out * height_ * width_;
  return *this;
}

template <class S>
BasicNetwork<S> NetworkBuilder::build() const {
  BasicNetwork<S> net;
  net.layers = layers_;
  net.input_size = input_size_;
  net.params.assign(params_, S(0));
  return net;
}

template BasicNetwork<float> NetworkBuilder::build<float>() const;
template BasicNetwork<double> NetworkBuilder::build<double>() const;

double glorot_limit(const LayerSpec& L) {
  double fan_in = 0.0, fan_out = 0.0;
  if (L.kind == LayerKind::Dense) {
    fan_in = static_cast<double>(L.in);
    fan_out = static_cast<double>(L.out);
  } else if (L.kind == LayerKind::Conv2d) {
    const double taps = static_cast<double>(L.kernel * L.kernel);
    fan_in = taps * static_cast<double>(L.c_in);
    fan_out = taps * static_cast<double>(L.c_out);
  } else {
    return 0.0;
  }
  return std::sqrt(6.0 / (fan_in + fan_out));
}

template <class S>
void glorot_initialize(BasicNetwork<S>& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& L : net.layers) {
    if (L.param_count() == 0) continue;
    const double lim = glorot_limit(L);
    std::uniform_real_distribution<double> u(-lim, lim);
    for (std::size_t i = 0; i < L.weight_count(); ++i) {
      // Clamp guards against float rounding pushing a draw past the bound.
      const auto w = static_cast<S>(u(rng));
      net.params[L.offset + i] = std::clamp(w, static_cast<S>(-lim), static_cast<S>(lim));
    }
    std::fill_n(net.params.begin() + static_cast<std::ptrdiff_t>(L.offset + L.weight_count()),
                L.bias_count(), S(0));
  }
}

template void glorot_initialize<float>(BasicNetwork<float>&, std::uint64_t);
template void glorot_initialize<double>(BasicNetwork<double>&, std::uint64_t);

Network init_network(const PatchShape& shape, std::uint64_t seed, const NetworkConfig& cfg) {
  shape.validate();
  NetworkBuilder b(shape.in_size());
  for (auto w : cfg.dense_widths) b.dense(w).leaky_relu(cfg.leaky_slope);
  b.dense(shape.out_size()).leaky_relu(cfg.leaky_slope);
  b.reshape(shape.n_channels_out, shape.n_time);
  for (auto m : cfg.conv_maps) b.conv2d(m, cfg.kernel).leaky_relu(cfg.leaky_slope);
  b.conv2d(1, cfg.kernel);
  Network net = b.build<float>();
  net.shape = shape;
  glorot_initialize(net, seed);
  return net;
}

template <class S>
std::vector<S> forward_batch(const BasicNetwork<S>& net, std::span<const S> inputs,
                             std::size_t batch) {
  check_batch(net, inputs.size(), batch);
  const auto sizes = layer_sizes(net);
  const std::size_t max_size = *std::max_element(sizes.begin(), sizes.end());
  constexpr std::size_t chunk = 64;
  std::vector<S> out(sizes.back() * batch);
  thread_local std::vector<S> a, b;
  a.reserve(max_size * chunk);
  b.reserve(max_size * chunk);
  for (std::size_t start = 0; start < batch; start += chunk) {
    const std::size_t n = std::min(chunk, batch - start);
    a.assign(inputs.begin() + static_cast<std::ptrdiff_t>(start * net.input_size),
             inputs.begin() + static_cast<std::ptrdiff_t>((start + n) * net.input_size));
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      b.resize(sizes[i + 1] * n);
      layer_forward(net.layers[i], net.params.data(), a.data(), sizes[i], b.data(), n);
      std::swap(a, b);
    }
    std::copy(a.begin(), a.end(), out.begin() + static_cast<std::ptrdiff_t>(start * sizes.back()));
  }
  return out;
}

template <class S>
std::vector<S> forward(const BasicNetwork<S>& net, std::span<const S> patch) {
  return forward_batch(net, patch, 1);
}

template <class S>
LossAndGrads<S> loss_and_grads(const BasicNetwork<S>& net, std::span<const S> batch_in,
                               std::span<const S> batch_target, std::size_t batch) {
  Workspace<S> ws;
  LossAndGrads<S> res;
  res.mse = loss_and_grads_into(net, batch_in, batch_target, batch, ws);
  res.grads = std::move(ws.grads);
  return res;
}

template <class S>
double mse_loss(const BasicNetwork<S>& net, std::span<const S> batch_in,
                std::span<const S> batch_target, std::size_t batch) {
  const auto pred = forward_batch(net, batch_in, batch);
  if (batch_target.size() != pred.size()) throw InvalidArgument("target batch shape mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(batch_target[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

template std::vector<float> forward<float>(const Network&, std::span<const float>);
template std::vector<double> forward<double>(const NetworkF64&, std::span<const double>);
template std::vector<float> forward_batch<float>(const Network&, std::span<const float>, std::size_t);
template std::vector<double> forward_batch<double>(const NetworkF64&, std::span<const double>,
                                                   std::size_t);
template LossAndGrads<float> loss_and_grads<float>(const Network&, std::span<const float>,
                                                   std::span<const float>, std::size_t);
template LossAndGrads<double> loss_and_grads<double>(const NetworkF64&, std::span<const double>,
                                                     std::span<const double>, std::size_t);
template double mse_loss<float>(const Network&, std::span<const float>, std::span<const float>,
                                std::size_t);
template double mse_loss<double>(const NetworkF64&, std::span<const double>,
                                 std::span<const double>, std::size_t);
template struct BasicNetwork<float>;
template struct BasicNetwork<double>;

TrainState TrainState::fresh(std::size_t n_params, double lr, double decay) {
  TrainState s;
  s.m.assign(n_params, 0.0);
  s.v.assign(n_params, 0.0);
  s.base_lr = lr;
  s.lr_plateau = lr;
  s.decay = decay;
  return s;
}

double TrainState::effective_lr() const {
  return lr_plateau / (1.0 + decay * static_cast<double>(step));
}

template <class S>
void adam_step(std::span<S> params, std::span<const S> grads, TrainState& state,
               const AdamHyper& hyper) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw InvalidArgument("adam_step: parameter, gradient and moment sizes differ");
  const double lr = state.effective_lr();
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] = static_cast<S>(static_cast<double>(params[i]) - lr * mhat / (std::sqrt(vhat) + hyper.eps));
  }
}

template void adam_step<float>(std::span<float>, std::span<const float>, TrainState&, const AdamHyper&);
template void adam_step<double>(std::span<double>, std::span<const double>, TrainState&,
                                const AdamHyper&);

namespace {

void gather(const PatchDataset& data, std::span<const std::size_t> idx, std::vector<float>& in,
            std::vector<float>& tgt) {
  in.resize(idx.size() * data.in_size);
  tgt.resize(idx.size() * data.out_size);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(data.inputs.begin() + static_cast<std::ptrdiff_t>(idx[i] * data.in_size), data.in_size,
                in.begin() + static_cast<std::ptrdiff_t>(i * data.in_size));
    std::copy_n(data.targets.begin() + static_cast<std::ptrdiff_t>(idx[i] * data.out_size),
                data.out_size, tgt.begin() + static_cast<std::ptrdiff_t>(i * data.out_size));
  }
}

double evaluate(const Network& net, const PatchDataset& data, const std::vector<std::size_t>& idx,
                std::size_t batch_size) {
  if (idx.empty()) return 0.0;
  std::vector<float> in, tgt;
  double total = 0.0;
  for (std::size_t s = 0; s < idx.size(); s += batch_size) {
    const std::size_t n = std::min(batch_size, idx.size() - s);
    gather(data, std::span(idx).subspan(s, n), in, tgt);
    total += mse_loss<float>(net, in, tgt, n) * static_cast<double>(n);
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(Network net, const PatchDataset& data, const TrainConfig& cfg) {
  const std::size_t n = data.size();
  if (n == 0) throw InvalidArgument("training dataset is empty");
  if (data.in_size != net.input_size || data.out_size != net.output_size())
    throw InvalidArgument("dataset patch sizes do not match the network");
  if (data.targets.size() != n * data.out_size) throw InvalidArgument("dataset targets are incomplete");
  if (cfg.batch_size == 0) throw InvalidArgument("batch size must be positive");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
  if (n >= 2) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  else n_val = 0;
  std::vector<std::size_t> train_idx(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> val_idx(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  if (val_idx.empty()) val_idx = train_idx;

  TrainResult res;
  res.state = TrainState::fresh(net.params.size(), cfg.learning_rate, cfg.decay);
  std::vector<float> in, tgt;
  Workspace<float> ws;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = res.state.lr_plateau;
    double total = 0.0;
    for (std::size_t s = 0; s < train_idx.size(); s += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, train_idx.size() - s);
      gather(data, std::span(train_idx).subspan(s, b), in, tgt);
      total += loss_and_grads_into<float>(net, in, tgt, b, ws) * static_cast<double>(b);
      adam_step<float>(net.params, ws.grads, res.state, cfg.adam);
    }
    rec.train_loss = total / static_cast<double>(train_idx.size());
    rec.val_loss = evaluate(net, data, val_idx, cfg.batch_size);

    auto& st = res.state;
    if (rec.val_loss < st.best_val - cfg.plateau_min_delta) {
      st.best_val = rec.val_loss;
      st.epochs_since_improvement = 0;
    } else if (++st.epochs_since_improvement >= cfg.plateau_patience) {
      st.lr_plateau *= cfg.plateau_factor;
      st.epochs_since_improvement = 0;
      rec.lr_reduced = true;
    }
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %3zu  train %.6g  val %.6g  lr %.3g%s\n", epoch, rec.train_loss,
                   rec.val_loss, rec.lr, rec.lr_reduced ? "  (lr halved)" : "");
    res.history.push_back(rec);
  }
  res.net = std::move(net);
  return res;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(9);
  os << "epoch,train_loss,val_loss,lr,lr_reduced\n";
  for (const auto& r : history)
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << ','
       << (r.lr_reduced ? 1 : 0) << '\n';
  return os.str();
}

void save_weights(const Network& net, const std::filesystem::path& path) {
  std::vector<Tensor> rec;
  rec.emplace_back(std::vector<std::uint64_t>{8},
                   std::vector<float>{kWeightsTag, static_cast<float>(net.layers.size()),
                                      static_cast<float>(net.input_size),
                                      static_cast<float>(net.shape.n_channels_in),
                                      static_cast<float>(net.shape.n_channels_out),
                                      static_cast<float>(net.shape.n_time),
                                      static_cast<float>(net.params.size()),
                                      static_cast<float>(net.task_tag)});
  std::vector<float> table;
  for (const auto& L : net.layers) {
    for (std::size_t v : {static_cast<std::size_t>(L.kind), L.in, L.out, L.c_in, L.c_out, L.height,
                          L.width, L.kernel})
      table.push_back(static_cast<float>(v));
    table.push_back(static_cast<float>(L.slope));
  }
  rec.emplace_back(std::vector<std::uint64_t>{net.layers.size(), 9}, std::move(table));
  rec.emplace_back(std::vector<std::uint64_t>{net.params.size()}, net.params);
  write_records_file(path, rec);
}

Network load_weights(const std::filesystem::path& path) {
  const auto rec = read_records_file(path);
  if (rec.size() != 3 || rec[0].data.size() != 8 || rec[0].data[0] != kWeightsTag)
    throw FormatError("not a weights container", 0);
  const auto& meta = rec[0].data;
  const auto n_layers = static_cast<std::size_t>(meta[1]);
  if (rec[1].dims != std::vector<std::uint64_t>{n_layers, 9})
    throw FormatError("layer table does not match the layer count", 0);

  NetworkBuilder b(static_cast<std::size_t>(meta[2]));
  try {
    for (std::size_t i = 0; i < n_layers; ++i) {
      const float* row = rec[1].data.data() + i * 9;
      const auto kind = static_cast<LayerKind>(static_cast<std::uint32_t>(row[0]));
      switch (kind) {
        case LayerKind::Dense: b.dense(static_cast<std::size_t>(row[2])); break;
        case LayerKind::Conv2d: b.conv2d(static_cast<std::size_t>(row[4]), static_cast<std::size_t>(row[7])); break;
        case LayerKind::LeakyRelu: b.leaky_relu(static_cast<double>(row[8])); break;
        case LayerKind::Reshape: b.reshape(static_cast<std::size_t>(row[5]), static_cast<std::size_t>(row[6])); break;
        default: throw FormatError("unknown layer kind", 0);
      }
    }
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("inconsistent layer table: ") + e.what(), 0);
  }
  Network net = b.build<float>();
  if (rec[2].data.size() != net.params.size())
    throw FormatError("parameter count does not match the layer table", 0);
  net.params = rec[2].data;
  net.shape = {static_cast<std::size_t>(meta[3]), static_cast<std::size_t>(meta[4]),
               static_cast<std::size_t>(meta[5])};
  net.task_tag = static_cast<std::uint32_t>(meta[7]);
  return net;
}

}  // namespace usbf
