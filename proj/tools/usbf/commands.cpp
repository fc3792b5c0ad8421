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

#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "channel_file.hpp"
#include "usbf/errors.hpp"
#include "usbf/experiment.hpp"
#include "usbf/metrics.hpp"
#include "usbf/tensor_io.hpp"

namespace fs = std::filesystem;

namespace usbf::cli {

namespace {

fs::path prepare_output(const std::string& out, const ExperimentConfig& cfg) {
  if (out.empty()) throw InvalidArgument("--out is required");
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  cfg.save(dir / "config.ini");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw InvalidArgument(std::string(flag) + " is required");
  if (!fs::exists(path)) throw IoError("no such file: " + path);
}

Network load_network_for(const std::string& path, Technique t) {
  require_file(path, "--weights");
  Network net = load_weights(path);
  if (net.task_tag != 0 && net.task_tag != technique_tag(t))
    throw InvalidArgument("weights in " + path + " were trained for another technique");
  return net;
}

// Sector image (one column per line) and raster image, both log-compressed.
void write_images(const SectorImage& env, const ExperimentConfig& cfg, const fs::path& dir) {
  const SectorImage lc = log_compress(env, cfg.dynamic_range_db);
  const std::size_t nl = lc.n_lines(), nd = lc.n_depths();
  std::vector<double> sector(nl * nd);
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t l = 0; l < nl; ++l) sector[d * nl + l] = lc.at(l, d);
  write_pgm(dir / "sector.pgm", nl, nd, sector);
  const RasterImage r = scan_convert(lc, cfg.pixel_pitch_mm * 1e-3);
  write_pgm(dir / "raster.pgm", r.nx, r.nz, r.pixels);
}

std::string sweep_rows_csv(const std::string& method, const std::vector<SweepRow>& rows) {
  std::string out;
  for (const auto& r : rows)
    out += method + ',' + format_number(r.depth_mm, 3) + ',' + format_number(r.fwhm_mm, 6) + ',' +
           format_number(r.rms_sll_db, 4) + '\n';
  return out;
}

}  // namespace

ExperimentConfig resolve_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig::desk() : ExperimentConfig::load(o.config);
  if (o.technique) cfg.technique = parse_technique(*o.technique);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

void cmd_simulate(const CommonOptions& c, const SimulateOptions& o) {
  const ExperimentConfig cfg = resolve_config(c);
  const ArrayChoice array = parse_array_choice(o.array);
  const ChannelFile f = simulate_scene(cfg, o.phantom, array);
  const fs::path dir = prepare_output(c.out, cfg);
  save_channel_file(f, dir / "channels.usbf");
}

void cmd_build_dataset(const CommonOptions& c) {
  const ExperimentConfig cfg = resolve_config(c);
  const Dataset ds =
      build_dataset(cfg.pairs, cfg.sidelobe_mix, cfg.seed, cfg.emulation_setup(cfg.technique));
  const fs::path dir = prepare_output(c.out, cfg);
  save_dataset(ds, dir / "dataset.usbf");
}

void cmd_train(const CommonOptions& c, const TrainOptions& o) {
  const ExperimentConfig cfg = resolve_config(c);
  require_file(o.dataset, "--dataset");
  const Dataset ds = load_dataset(o.dataset);
  if (ds.header.technique != cfg.technique)
    throw InvalidArgument("dataset was built for " + std::string(to_string(ds.header.technique)) +
                          " but the configuration selects " + std::string(to_string(cfg.technique)));
  const PatchShape shape{ds.header.n_channels_in, ds.header.n_channels_out, ds.header.patch_len};
  Network net = init_network(shape, cfg.seed + 1, cfg.network());
  TrainConfig tc = cfg.training();
  tc.seed = cfg.seed + 2;
  tc.verbose = c.verbose;
  const fs::path dir = prepare_output(c.out, cfg);
  TrainResult r = train(std::move(net), ds.to_patch_dataset(), tc);
  r.net.task_tag = technique_tag(ds.header.technique);
  save_weights(r.net, dir / "weights.usbf");
  write_text(dir / "history.csv", history_csv(r.history));
}

void cmd_reconstruct(const CommonOptions& c, const ReconstructOptions& o) {
  const ExperimentConfig cfg = resolve_config(c);
  require_file(o.data, "--data");
  const std::string method = o.method.empty() ? (o.weights.empty() ? "das" : "dnnb") : o.method;
  const ChannelFile f = load_channel_file(cfg, o.data);
  SectorImage env;
  if (method == "das") {
    env = das_image(f.acquisition, f.grid, {cfg.interp});
  } else if (method == "dnnb") {
    const Network net = load_network_for(o.weights, cfg.technique);
    env = dnnb_image(f.acquisition, net, f.grid, {cfg.overlap_radius});
  } else {
    throw InvalidArgument("unknown method '" + method + "' (expected das or dnnb)");
  }
  const fs::path dir = prepare_output(c.out, cfg);
  save_envelope(env, dir / "envelope.usbf");
  write_images(env, cfg, dir);
}

void cmd_evaluate(const CommonOptions& c, const EvaluateOptions& o) {
  const ExperimentConfig cfg = resolve_config(c);
  require_file(o.image, "--image");
  const SectorImage img = load_envelope(o.image);
  const Scene scene = make_scene(cfg, o.scene);
  std::string csv = "metric,target,value\n";
  if (scene.cyst) {
    const ContrastQuality q = contrast_quality(img, scene);
    csv += "cr_db,cyst," + format_number(q.cr_db, 4) + '\n';
    csv += "cnr,cyst," + format_number(q.cnr, 6) + '\n';
  } else if (!scene.targets.empty()) {
    for (std::size_t i = 0; i < scene.targets.size(); ++i) {
      const ImageQuality q = point_quality(img, scene.targets[i]);
      csv += "fwhm_mm," + std::to_string(i) + ',' + format_number(q.fwhm_mm, 6) + '\n';
      csv += "rms_sll_db," + std::to_string(i) + ',' + format_number(q.rms_sll_db, 4) + '\n';
    }
  } else {
    throw InvalidArgument("scene '" + o.scene + "' has nothing to measure");
  }
  const fs::path dir = prepare_output(c.out, cfg);
  write_text(dir / "metrics.csv", csv);
}

void cmd_sweep_depth(const CommonOptions& c, const SweepDepthOptions& o) {
  const ExperimentConfig cfg = resolve_config(c);
  std::vector<double> depths;
  for (double d : cfg.depths_mm) depths.push_back(d * 1e-3);
  const ArrayGeometry small = cfg.small_array(), large = cfg.large_array();
  auto das_with = [&](const ArrayGeometry& arr) {
    return [&cfg, arr](Point2 target) {
      const Scene s = point_scene(cfg, target);
      const Acquisition a =
          acquire(cfg.technique, s.phantom, arr, arr, cfg.pulse(), cfg.acquisition(), s.grid.angles);
      return das_image(a, s.grid, {cfg.interp});
    };
  };
  std::string csv = "method,depth_mm,fwhm_mm,rms_sll_db\n";
  csv += sweep_rows_csv("das_small", depth_sweep(depths, das_with(small)));
  csv += sweep_rows_csv("das_large", depth_sweep(depths, das_with(large)));
  if (!o.weights.empty()) {
    const Network net = load_network_for(o.weights, cfg.technique);
    csv += sweep_rows_csv("dnnb", depth_sweep(depths, [&](Point2 target) {
      const Scene s = point_scene(cfg, target);
      const Acquisition a = acquire(cfg.technique, s.phantom, small, small, cfg.pulse(),
                                    cfg.acquisition(), s.grid.angles);
      return dnnb_image(a, net, s.grid, {cfg.overlap_radius});
    }));
  }
  const fs::path dir = prepare_output(c.out, cfg);
  write_text(dir / "depth_sweep.csv", csv);
}

void cmd_sweep_aperture(const CommonOptions& c, const SweepApertureOptions& o) {
  const ExperimentConfig cfg = resolve_config(c);
  const fs::path dir = prepare_output(c.out, cfg);
  const auto rows = aperture_sweep(cfg, [&](const EmulationSetup& setup, int factor) {
    const std::string name = "weights_f" + std::to_string(factor) + ".usbf";
    if (!o.weights_dir.empty()) {
      const fs::path p = fs::path(o.weights_dir) / name;
      if (fs::exists(p)) {
        Network net = load_weights(p);
        if (net.shape.n_channels_in != setup.shape().n_channels_in)
          throw InvalidArgument(p.string() + " does not fit receive factor " + std::to_string(factor));
        return net;
      }
    }
    if (c.verbose) std::fprintf(stderr, "training the factor-%d network\n", factor);
    TrainedModel m = train_emulator(cfg, setup, cfg.seed + static_cast<std::uint64_t>(factor), c.verbose);
    save_weights(m.net, dir / name);
    return m.net;
  });
  write_text(dir / "aperture_sweep.csv", aperture_csv(rows));
}

}  // namespace usbf::cli
