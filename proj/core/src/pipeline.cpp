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

#include "usbf/pipeline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "usbf/errors.hpp"
#include "usbf/parallel.hpp"

namespace usbf {
namespace {

using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;
using VecF = Eigen::Matrix<float, Eigen::Dynamic, 1>;

constexpr std::size_t kChunk = 256;

float leaky(float x, float slope) { return x > 0.0f ? x : slope * x; }

}  // namespace

namespace detail {

// Evaluation plan for the centre column of the output patch: the dense stack up
// to the last hidden layer runs as usual, the output-sized dense layer only
// produces the columns inside the convolutions' receptive field, and each
// convolution shrinks that window by its kernel radius.
struct CenterPlan {
  bool valid = false;
  Network prefix;
  MatF w_sub;
  VecF b_sub;
  bool dense_act = false;
  float dense_slope = 0.0f;
  std::size_t height = 0, width = 0, center = 0;
  struct Conv {
    LayerSpec spec;
    bool act = false;
    float slope = 0.0f;
    std::size_t lo = 0, hi = 0;  // output column window [lo, hi)
  };
  std::vector<Conv> convs;
  std::size_t in_lo = 0, in_hi = 0;  // dense output column window

  static CenterPlan build(const Network& net) {
    CenterPlan p;
    const auto& L = net.layers;
    std::size_t r = 0;
    while (r < L.size() && L[r].kind != LayerKind::Reshape) ++r;
    if (r == L.size() || r == 0) return p;
    std::size_t d = r - 1;
    if (L[d].kind == LayerKind::LeakyRelu) {
      p.dense_act = true;
      p.dense_slope = static_cast<float>(L[d].slope);
      if (d == 0) return p;
      --d;
    }
    if (L[d].kind != LayerKind::Dense || L[r].c_in != 1) return p;
    for (std::size_t i = r + 1; i < L.size(); ++i) {
      if (L[i].kind == LayerKind::Conv2d) {
        p.convs.push_back({L[i], false, 0.0f, 0, 0});
      } else if (L[i].kind == LayerKind::LeakyRelu && !p.convs.empty() && !p.convs.back().act) {
        p.convs.back().act = true;
        p.convs.back().slope = static_cast<float>(L[i].slope);
      } else {
        return p;
      }
    }
    if (p.convs.empty() || p.convs.back().spec.c_out != 1) return p;

    p.height = L[r].height;
    p.width = L[r].width;
    p.center = p.width / 2;
    const auto clip_lo = [&](std::size_t rad) { return p.center >= rad ? p.center - rad : 0; };
    const auto clip_hi = [&](std::size_t rad) { return std::min(p.width, p.center + rad + 1); };
    std::size_t rad = 0;
    for (auto it = p.convs.rbegin(); it != p.convs.rend(); ++it) {
      it->lo = clip_lo(rad);
      it->hi = clip_hi(rad);
      rad += it->spec.kernel / 2;
    }
    p.in_lo = clip_lo(rad);
    p.in_hi = clip_hi(rad);

    p.prefix = net;
    p.prefix.layers.resize(d);
    const LayerSpec& D = L[d];
    const Eigen::Map<const MatF> W(net.params.data() + D.offset, static_cast<Eigen::Index>(D.out),
                                   static_cast<Eigen::Index>(D.in));
    const std::size_t cols = p.in_hi - p.in_lo;
    p.w_sub.resize(static_cast<Eigen::Index>(p.height * cols), static_cast<Eigen::Index>(D.in));
    p.b_sub.resize(static_cast<Eigen::Index>(p.height * cols));
    for (std::size_t h = 0; h < p.height; ++h)
      for (std::size_t w = p.in_lo; w < p.in_hi; ++w) {
        const auto row = static_cast<Eigen::Index>(h * cols + (w - p.in_lo));
        const auto src = static_cast<Eigen::Index>(h * p.width + w);
        p.w_sub.row(row) = W.row(src);
        p.b_sub(row) = net.params[D.offset + D.weight_count() + static_cast<std::size_t>(src)];
      }
    p.valid = true;
    return p;
  }

  // Convolution restricted to output columns [c.lo, c.hi); `in` covers [in_lo, in_hi).
  void conv(const Conv& c, const Network& net, const std::vector<float>& in, std::size_t in_lo,
            std::size_t in_hi, std::vector<float>& out) const {
    const auto& S = c.spec;
    const std::size_t C = S.c_in, Co = S.c_out, k = S.kernel, pad = k / 2;
    const std::size_t win = in_hi - in_lo, wout = c.hi - c.lo;
    const float* K = net.params.data() + S.offset;
    const float* b = K + S.weight_count();
    out.assign(height * wout * Co, 0.0f);
    for (std::size_t h = 0; h < height; ++h)
      for (std::size_t w = c.lo; w < c.hi; ++w) {
        float* acc = out.data() + (h * wout + (w - c.lo)) * Co;
        std::copy_n(b, Co, acc);
        for (std::size_t kh = 0; kh < k; ++kh) {
          const auto hh = static_cast<std::ptrdiff_t>(h + kh) - static_cast<std::ptrdiff_t>(pad);
          if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(height)) continue;
          for (std::size_t kw = 0; kw < k; ++kw) {
            const auto ww = static_cast<std::ptrdiff_t>(w + kw) - static_cast<std::ptrdiff_t>(pad);
            if (ww < 0 || ww >= static_cast<std::ptrdiff_t>(width)) continue;
            const float* x = in.data() + (static_cast<std::size_t>(hh) * win +
                                          (static_cast<std::size_t>(ww) - in_lo)) * C;
            const float* kt = K + (kh * k + kw) * C * Co;
            for (std::size_t ci = 0; ci < C; ++ci) {
              const float xv = x[ci];
              const float* kc = kt + ci * Co;
              for (std::size_t co = 0; co < Co; ++co) acc[co] += kc[co] * xv;
            }
          }
        }
        if (c.act)
          for (std::size_t co = 0; co < Co; ++co) acc[co] = leaky(acc[co], c.slope);
      }
  }

  void run(const Network& net, std::span<const float> inputs, std::size_t n,
           std::span<double> out) const {
    const std::size_t cols = in_hi - in_lo;
    std::vector<float> a, b;
    for (std::size_t s = 0; s < n; s += kChunk) {
      const std::size_t m = std::min(kChunk, n - s);
      const auto hidden = forward_batch<float>(
          prefix, inputs.subspan(s * net.input_size, m * net.input_size), m);
      const std::size_t hsz = hidden.size() / m;
      const Eigen::Map<const MatF> H(hidden.data(), static_cast<Eigen::Index>(hsz),
                                     static_cast<Eigen::Index>(m));
      MatF Y = w_sub * H;
      Y.colwise() += b_sub;
      for (std::size_t e = 0; e < m; ++e) {
        a.assign(Y.col(static_cast<Eigen::Index>(e)).data(),
                 Y.col(static_cast<Eigen::Index>(e)).data() + height * cols);
        if (dense_act)
          for (float& v : a) v = leaky(v, dense_slope);
        std::size_t lo = in_lo, hi = in_hi;
        for (const auto& c : convs) {
          conv(c, net, a, lo, hi, b);
          std::swap(a, b);
          lo = c.lo;
          hi = c.hi;
        }
        double sum = 0.0;
        for (std::size_t h = 0; h < height; ++h) sum += static_cast<double>(a[h * (hi - lo) + (center - lo)]);
        out[s + e] = sum;
      }
    }
  }
};

}  // namespace detail

std::uint32_t technique_tag(Technique t) { return static_cast<std::uint32_t>(t) + 1; }

NetworkEmulator::NetworkEmulator(const Network& net, Technique technique, bool full_forward)
    : net_(net), technique_(technique) {
  net_.shape.validate();
  if (net_.input_size != net_.shape.in_size() || net_.output_size() != net_.shape.out_size())
    throw InvalidArgument("network sizes do not match its patch shape");
  if (net_.task_tag != 0 && net_.task_tag != technique_tag(technique))
    throw InvalidArgument("network was trained for a different technique");
  if (!full_forward) {
    auto plan = std::make_shared<detail::CenterPlan>(detail::CenterPlan::build(net_));
    if (plan->valid) plan_ = std::move(plan);
  }
}

void NetworkEmulator::center_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                                  std::span<double> out) const {
  const std::size_t n = ctx.size();
  if (inputs.size() != n * net_.input_size || out.size() != n)
    throw InvalidArgument("emulator batch shape mismatch");
  if (n == 0) return;
  if (plan_) {
    plan_->run(net_, inputs, n, out);
    return;
  }
  const std::size_t T = net_.shape.n_time, c = T / 2;
  for (std::size_t s = 0; s < n; s += kChunk) {
    const std::size_t m = std::min(kChunk, n - s);
    const auto y = forward_batch<float>(net_, inputs.subspan(s * net_.input_size, m * net_.input_size), m);
    for (std::size_t e = 0; e < m; ++e) {
      double sum = 0.0;
      for (std::size_t h = 0; h < net_.shape.n_channels_out; ++h)
        sum += static_cast<double>(y[e * net_.shape.out_size() + h * T + c]);
      out[s + e] = sum;
    }
  }
}

void NetworkEmulator::column_sums(std::span<const float> inputs, std::span<const FocalContext> ctx,
                                  std::size_t radius, std::span<double> out) const {
  const std::size_t n = ctx.size(), T = net_.shape.n_time, w = 2 * radius + 1;
  if (radius > T / 2 || radius + T / 2 >= T) throw InvalidArgument("overlap radius exceeds the patch");
  if (inputs.size() != n * net_.input_size || out.size() != n * w)
    throw InvalidArgument("emulator batch shape mismatch");
  if (radius == 0) return center_sums(inputs, ctx, out);
  const std::size_t first = T / 2 - radius;
  for (std::size_t s = 0; s < n; s += kChunk) {
    const std::size_t m = std::min(kChunk, n - s);
    const auto y = forward_batch<float>(net_, inputs.subspan(s * net_.input_size, m * net_.input_size), m);
    for (std::size_t e = 0; e < m; ++e)
      for (std::size_t j = 0; j < w; ++j) {
        double sum = 0.0;
        for (std::size_t h = 0; h < net_.shape.n_channels_out; ++h)
          sum += static_cast<double>(y[e * net_.shape.out_size() + h * T + first + j]);
        out[(s + e) * w + j] = sum;
      }
  }
}

OracleEmulator::OracleEmulator(ChannelSource large, std::size_t patch_len)
    : large_(std::move(large)), patch_len_(patch_len) {
  if (large_.n_channels() % 2 == 0) throw InvalidArgument("oracle array must have 2n - 1 elements");
}

PatchShape OracleEmulator::shape() const {
  return {(large_.n_channels() + 1) / 2, large_.n_channels(), patch_len_};
}

void OracleEmulator::center_sums(std::span<const float>, std::span<const FocalContext> ctx,
                                 std::span<double> out) const {
  if (out.size() != ctx.size()) throw InvalidArgument("emulator batch shape mismatch");
  std::vector<float> col(large_.n_channels());
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    CoverageReport cov;
    large_.focus(ctx[i].event, ctx[i].focal, 1, col.data(), cov);
    double sum = 0.0;
    for (float v : col) sum += static_cast<double>(v);
    out[i] = sum / ctx[i].scale;
  }
}

void OracleEmulator::column_sums(std::span<const float>, std::span<const FocalContext> ctx,
                                 std::size_t radius, std::span<double> out) const {
  const std::size_t w = 2 * radius + 1, C = large_.n_channels();
  if (radius > patch_len_ / 2 || radius + patch_len_ / 2 >= patch_len_)
    throw InvalidArgument("overlap radius exceeds the patch");
  if (out.size() != ctx.size() * w) throw InvalidArgument("emulator batch shape mismatch");
  std::vector<float> cols(C * w);
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    CoverageReport cov;
    large_.focus(ctx[i].event, ctx[i].focal, w, cols.data(), cov);
    for (std::size_t j = 0; j < w; ++j) {
      double sum = 0.0;
      for (std::size_t c = 0; c < C; ++c) sum += static_cast<double>(cols[c * w + j]);
      out[i * w + j] = sum / ctx[i].scale;
    }
  }
}

std::vector<double> dnnb_rf(const ChannelSource& small, const PatchEmulator& emulator,
                            const SectorGrid& grid, CoverageReport& coverage, DnnbOptions opt) {
  if (grid.angles.empty() || grid.depths.empty()) throw InvalidArgument("empty image grid");
  if (emulator.technique() != small.technique())
    throw InvalidArgument("emulator technique does not match the channel data");
  const PatchShape shape = emulator.shape();
  if (shape.n_channels_in != small.n_channels())
    throw InvalidArgument("emulator input channels do not match the channel data");
  if (small.technique() == Technique::PA) {
    const auto& la = small.line_angles();
    if (la.size() != grid.n_lines()) throw InvalidArgument("PA grid lines must be the acquisition lines");
    for (std::size_t l = 0; l < la.size(); ++l)
      if (std::abs(la[l] - grid.angles[l]) > 1e-12)
        throw InvalidArgument("PA grid lines must be the acquisition lines");
  }

  const std::size_t nl = grid.n_lines(), nd = grid.n_depths(), T = shape.n_time;
  const std::size_t psize = shape.in_size();
  const std::size_t r = opt.overlap_radius, w = 2 * r + 1;
  if (r > 0) {
    if (r > T / 2 || r + T / 2 >= T) throw InvalidArgument("overlap radius exceeds the patch");
    const double step = small.config().c / (2.0 * small.config().fs);
    for (std::size_t d = 1; d < nd; ++d)
      if (std::abs(grid.depths[d] - grid.depths[d - 1] - step) > 0.01 * step)
        throw InvalidArgument("overlap averaging needs a depth step of c / (2 fs)");
  }
  std::vector<double> rf(nl * nd, 0.0);
  std::vector<CoverageReport> cov(nl);
  parallel_for(nl, [&](std::size_t l) {
    std::vector<std::size_t> events;
    switch (small.technique()) {
      case Technique::SA: events = {0}; break;
      case Technique::STA:
        for (std::size_t e = 0; e < small.n_events(); ++e) events.push_back(e);
        break;
      case Technique::PA: events = {l}; break;
    }
    std::vector<float> patches;
    std::vector<FocalContext> ctx;
    std::vector<std::size_t> depth_of;
    std::vector<float> patch(psize);
    std::vector<double> sums;
    for (std::size_t ev : events) {
      patches.clear();
      ctx.clear();
      depth_of.clear();
      for (std::size_t d = 0; d < nd; ++d) {
        const FocalPoint fp{grid.angles[l], grid.depths[d]};
        small.focus(ev, fp, T, patch.data(), cov[l]);
        float m = 0.0f;
        for (float v : patch) m = std::max(m, std::abs(v));
        if (m == 0.0f) continue;  // an all-zero patch emulates to zero
        const double scale = m;
        for (float& v : patch) v = static_cast<float>(static_cast<double>(v) / scale);
        patches.insert(patches.end(), patch.begin(), patch.end());
        ctx.push_back({ev, fp, scale});
        depth_of.push_back(d);
      }
      if (r == 0) {
        sums.assign(ctx.size(), 0.0);
        emulator.center_sums(patches, ctx, sums);
        for (std::size_t i = 0; i < ctx.size(); ++i)
          rf[l * nd + depth_of[i]] += ctx[i].scale * sums[i];
        continue;
      }
      sums.assign(ctx.size() * w, 0.0);
      emulator.column_sums(patches, ctx, r, sums);
      for (std::size_t i = 0; i < ctx.size(); ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const auto d = static_cast<std::ptrdiff_t>(depth_of[i] + j) - static_cast<std::ptrdiff_t>(r);
          if (d < 0 || d >= static_cast<std::ptrdiff_t>(nd)) continue;
          // Every depth sample hears from the patches within r steps of it.
          const auto du = static_cast<std::size_t>(d);
          const std::size_t lo = du >= r ? du - r : 0, hi = std::min(nd - 1, du + r);
          rf[l * nd + du] += ctx[i].scale * sums[i * w + j] / static_cast<double>(hi - lo + 1);
        }
    }
  });
  for (const auto& c : cov) coverage.merge(c);
  return rf;
}

SectorImage dnnb_reconstruct(const ChannelSource& small, const PatchEmulator& emulator,
                             const SectorGrid& grid, DnnbOptions opt) {
  CoverageReport cov;
  const auto rf = dnnb_rf(small, emulator, grid, cov, opt);
  return envelope_along_depth(grid, rf, cov);
}

}  // namespace usbf
