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

#include "channel_file.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

#include "usbf/errors.hpp"
#include "usbf/tensor_io.hpp"

namespace usbf::cli {

namespace {

constexpr float kChannelFileTag = 1.0f;
constexpr const char* kSampleMismatch =
    "channel file samples do not match the configuration they are read with";

float scene_code(const std::string& s) {
  if (s == "point") return 0.0f;
  if (s == "cyst") return 1.0f;
  if (s == "empty") return 2.0f;
  throw InvalidArgument("unknown scene '" + s + "'");
}

std::string scene_name(float code) {
  if (code == 0.0f) return "point";
  if (code == 1.0f) return "cyst";
  if (code == 2.0f) return "empty";
  throw FormatError("unknown scene code in channel file", 0);
}

std::vector<float> to_f32(const std::vector<double>& v) { return {v.begin(), v.end()}; }

void expect_dims(const Tensor& t, const std::vector<std::uint64_t>& dims, const char* what) {
  if (t.dims != dims)
    throw InvalidArgument(std::string("channel file ") + what +
                          " does not match the configuration it is read with");
}

}  // namespace

ArrayChoice parse_array_choice(const std::string& s) {
  if (s == "small") return ArrayChoice::Small;
  if (s == "large") return ArrayChoice::Large;
  throw InvalidArgument("unknown array '" + s + "' (expected small or large)");
}

std::string to_string(ArrayChoice a) { return a == ArrayChoice::Small ? "small" : "large"; }

ChannelFile simulate_scene(const ExperimentConfig& cfg, const std::string& scene_name,
                           ArrayChoice array) {
  const Scene scene = make_scene(cfg, scene_name);
  const ArrayGeometry geom = array == ArrayChoice::Small ? cfg.small_array() : cfg.large_array();
  ChannelFile f;
  f.acquisition = acquire(cfg.technique, scene.phantom, geom, geom, cfg.pulse(), cfg.acquisition(),
                          scene.grid.angles);
  f.array = array;
  f.scene = scene.name;
  f.grid = scene.grid;
  return f;
}

void save_channel_file(const ChannelFile& f, const std::filesystem::path& path) {
  const Acquisition& a = f.acquisition;
  Tensor samples;
  double fs = 0.0;
  std::visit(
      [&](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, SAChannelData>)
          samples = Tensor({d.n_positions, d.n_time}, d.samples);
        else if constexpr (std::is_same_v<D, STAChannelData>)
          samples = Tensor({d.n_tx, d.n_rx, d.n_time}, d.samples);
        else
          samples = Tensor({d.n_lines, d.n_rx, d.n_time}, d.samples);
        fs = d.fs;
      },
      a.data);
  const std::vector<float> meta{kChannelFileTag,
                                static_cast<float>(static_cast<int>(a.technique)),
                                f.array == ArrayChoice::Small ? 0.0f : 1.0f,
                                scene_code(f.scene),
                                static_cast<float>(fs),
                                static_cast<float>(a.tx.size()),
                                static_cast<float>(a.rx.size())};
  write_records_file(path, {samples, Tensor({meta.size()}, meta),
                            Tensor({f.grid.angles.size()}, to_f32(f.grid.angles)),
                            Tensor({f.grid.depths.size()}, to_f32(f.grid.depths))});
}

ChannelFile load_channel_file(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  const auto rec = read_records_file(path);
  if (rec.size() != 4 || rec[1].data.size() != 7 || rec[1].data[0] != kChannelFileTag)
    throw FormatError("not a channel data file: " + path.string(), 0);
  const auto& meta = rec[1].data;
  const int tcode = static_cast<int>(meta[1]);
  if (tcode < 0 || tcode > 2) throw FormatError("unknown technique code in channel file", 0);
  const auto technique = static_cast<Technique>(tcode);
  if (technique != cfg.technique)
    throw InvalidArgument("channel file holds " + std::string(to_string(technique)) +
                          " data but the configuration selects " +
                          std::string(to_string(cfg.technique)));

  ChannelFile f;
  f.array = meta[2] == 0.0f ? ArrayChoice::Small : ArrayChoice::Large;
  f.scene = scene_name(meta[3]);
  // Only the grid is needed here; the phantom is regenerated but not simulated.
  f.grid = make_scene(cfg, f.scene).grid;
  expect_dims(rec[2], {f.grid.angles.size()}, "grid");
  expect_dims(rec[3], {f.grid.depths.size()}, "grid");
  for (std::size_t i = 0; i < f.grid.angles.size(); ++i)
    if (rec[2].data[i] != static_cast<float>(f.grid.angles[i]))
      throw InvalidArgument("channel file grid does not match the configuration it is read with");
  for (std::size_t i = 0; i < f.grid.depths.size(); ++i)
    if (rec[3].data[i] != static_cast<float>(f.grid.depths[i]))
      throw InvalidArgument("channel file grid does not match the configuration it is read with");

  Acquisition& a = f.acquisition;
  a.technique = technique;
  a.tx = a.rx = f.array == ArrayChoice::Small ? cfg.small_array() : cfg.large_array();
  a.cfg = cfg.acquisition();
  if (meta[4] != static_cast<float>(a.cfg.fs) || meta[5] != static_cast<float>(a.tx.size()) ||
      meta[6] != static_cast<float>(a.rx.size()))
    throw InvalidArgument("channel file geometry does not match the configuration it is read with");

  const Tensor& s = rec[0];
  switch (technique) {
    case Technique::SA: {
      if (s.dims.size() != 2 || s.dims[0] != a.rx.size()) throw InvalidArgument(kSampleMismatch);
      SAChannelData d;
      d.n_positions = s.dims[0];
      d.n_time = s.dims[1];
      d.fs = a.cfg.fs;
      d.samples = s.data;
      a.data = std::move(d);
      break;
    }
    case Technique::STA: {
      if (s.dims.size() != 3 || s.dims[0] != a.tx.size() || s.dims[1] != a.rx.size())
        throw InvalidArgument(kSampleMismatch);
      STAChannelData d;
      d.n_tx = s.dims[0];
      d.n_rx = s.dims[1];
      d.n_time = s.dims[2];
      d.fs = a.cfg.fs;
      d.samples = s.data;
      a.data = std::move(d);
      break;
    }
    case Technique::PA: {
      if (s.dims.size() != 3 || s.dims[0] != f.grid.angles.size() || s.dims[1] != a.rx.size())
        throw InvalidArgument(kSampleMismatch);
      PAChannelData d;
      d.n_lines = s.dims[0];
      d.n_rx = s.dims[1];
      d.n_time = s.dims[2];
      d.n_tx = a.tx.size();
      d.fs = a.cfg.fs;
      d.samples = s.data;
      d.line_angles = f.grid.angles;
      for (double th : d.line_angles) {
        const auto del = focusing_delays(a.tx, polar_point(th, a.cfg.tx_focus_depth), a.cfg.c);
        d.tx_delays.insert(d.tx_delays.end(), del.begin(), del.end());
      }
      a.data = std::move(d);
      break;
    }
  }
  return f;
}

void save_envelope(const SectorImage& img, const std::filesystem::path& path) {
  write_records_file(path, {Tensor({img.n_lines(), img.n_depths()}, to_f32(img.values)),
                            Tensor({img.n_lines()}, to_f32(img.line_angles)),
                            Tensor({img.n_depths()}, to_f32(img.depth_axis))});
}

SectorImage load_envelope(const std::filesystem::path& path) {
  const auto rec = read_records_file(path);
  if (rec.size() != 3 || rec[0].dims.size() != 2 || rec[1].dims.size() != 1 ||
      rec[2].dims.size() != 1 || rec[0].dims[0] != rec[1].dims[0] || rec[0].dims[1] != rec[2].dims[0])
    throw FormatError("not an envelope image file: " + path.string(), 0);
  SectorImage img;
  img.values.assign(rec[0].data.begin(), rec[0].data.end());
  img.line_angles.assign(rec[1].data.begin(), rec[1].data.end());
  img.depth_axis.assign(rec[2].data.begin(), rec[2].data.end());
  return img;
}

}  // namespace usbf::cli
