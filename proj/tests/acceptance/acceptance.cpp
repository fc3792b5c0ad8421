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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "usbf/experiment.hpp"
#include "usbf/signal.hpp"

namespace fs = std::filesystem;
using namespace usbf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) { return format_number(v, digits); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;
  std::function<Outcome()> run;
};

const Technique kTechniques[] = {Technique::SA, Technique::STA, Technique::PA};

std::string name(Technique t) { return std::string(to_string(t)); }

// ---------------------------------------------------------------------------
// Shared state: trained networks are reused by the point and cyst criteria.

struct Context {
  ExperimentConfig cfg = ExperimentConfig::desk();
  fs::path work;
  std::string cli;
  bool verbose = false;
  std::map<Technique, TrainedModel> models;
  std::map<Technique, double> train_seconds;

  const TrainedModel& model(Technique t) {
    auto it = models.find(t);
    if (it != models.end()) return it->second;
    const auto t0 = Clock::now();
    TrainedModel m = train_emulator(cfg, cfg.emulation_setup(t), cfg.seed, verbose);
    train_seconds[t] = seconds_since(t0);
    save_weights(m.net, work / ("weights_" + name(t) + ".usbf"));
    std::ofstream(work / ("history_" + name(t) + ".csv")) << history_csv(m.history);
    return models.emplace(t, std::move(m)).first->second;
  }
};

// Small-array acquisition and its large partner for `scene` (STA keeps the
// small transmit aperture on the large side only when `receive_only`).
struct Paired {
  Acquisition small;
  Acquisition large;
};

Paired acquire_pair(const ExperimentConfig& cfg, Technique t, const Scene& scene, bool receive_only) {
  const auto small = cfg.small_array(), large = cfg.large_array();
  const auto& tx_large = (t == Technique::STA && receive_only) ? small : large;
  return {acquire(t, scene.phantom, small, small, cfg.pulse(), cfg.acquisition(), scene.grid.angles),
          acquire(t, scene.phantom, tx_large, large, cfg.pulse(), cfg.acquisition(), scene.grid.angles)};
}

// ---------------------------------------------------------------------------
// 1. Monostatic records equal the multistatic diagonal.

Outcome sa_sta_identity(Context& ctx) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ux(-0.02, 0.02), uz(0.012, 0.068);
  std::normal_distribution<double> amp;
  const auto array = ctx.cfg.small_array();
  const auto acq = ctx.cfg.acquisition();
  std::size_t compared = 0, mismatched = 0, phantoms = 0;
  for (std::size_t n : {1u, 2u, 5u, 20u, 60u, 200u}) {
    Phantom ph;
    for (std::size_t i = 0; i < n; ++i) ph.scatterers.push_back({ux(rng), uz(rng), amp(rng)});
    const auto sa = simulate_sa(ph, array, ctx.cfg.pulse(), acq);
    const auto sta = simulate_sta(ph, array, ctx.cfg.pulse(), acq);
    ++phantoms;
    if (sa.n_time != sta.n_time) return {false, "record lengths differ"};
    for (std::size_t e = 0; e < array.size(); ++e)
      for (std::size_t k = 0; k < sa.n_time; ++k) {
        ++compared;
        mismatched += sa.at(e, k) != sta.at(e, e, k);
      }
  }
  return {mismatched == 0, std::to_string(phantoms) + " phantoms, " + std::to_string(compared) +
                               " samples, " + std::to_string(mismatched) + " differ"};
}

// ---------------------------------------------------------------------------
// 2. Echo arrival times follow the path length.

Outcome echo_geometry(Context& ctx) {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> un(1, 33);
  std::uniform_real_distribution<double> upitch(0.15e-3, 0.45e-3), uc(1450.0, 1600.0),
      ux(-0.015, 0.015), uz(0.015, 0.065);
  const PulseWaveform pulse = ctx.cfg.pulse();
  double worst_onset = 0.0, worst_peak = 0.0;
  std::size_t channels = 0;
  for (int trial = 0; trial < 100; ++trial) {
    AcquisitionConfig acq = ctx.cfg.acquisition();
    acq.c = uc(rng);
    const ArrayGeometry array = make_linear_array_pitch(un(rng), upitch(rng));
    const Point2 p{ux(rng), uz(rng)};
    const Phantom ph = make_point_phantom({{p.x, p.z, 1.0}});
    const double dt = 1.0 / acq.fs;
    // Measured onset (first nonzero sample) and envelope peak minus the pulse centre.
    const auto check = [&](const float* ch, std::size_t n, double tau) {
      std::size_t first = 0;
      while (first < n && ch[first] == 0.0f) ++first;
      const std::vector<double> x(ch, ch + n);
      const auto env = envelope(x);
      const auto peak = static_cast<std::size_t>(std::max_element(env.begin(), env.end()) - env.begin());
      worst_onset = std::max(worst_onset, std::abs(static_cast<double>(first) * dt - tau) / dt);
      worst_peak = std::max(worst_peak, std::abs(static_cast<double>(peak) * dt - pulse_center(pulse) - tau) / dt);
      ++channels;
    };
    if (trial % 2 == 0) {
      const auto d = simulate_sa(ph, array, pulse, acq);
      for (std::size_t i = 0; i < array.size(); ++i)
        check(d.channel(i), d.n_time, 2.0 * std::hypot(p.x - array.element_x[i], p.z) / acq.c);
    } else {
      const auto d = simulate_sta(ph, array, pulse, acq);
      for (std::size_t t = 0; t < array.size(); t += std::max<std::size_t>(1, array.size() / 5))
        for (std::size_t r = 0; r < array.size(); ++r)
          check(d.channel(t, r), d.n_time,
                (std::hypot(p.x - array.element_x[t], p.z) + std::hypot(p.x - array.element_x[r], p.z)) / acq.c);
    }
  }
  const bool ok = worst_onset <= 1.0 && worst_peak <= 1.0;
  return {ok, "100 configurations, " + std::to_string(channels) + " channels; worst onset error " +
                  fmt(worst_onset) + " samples, worst envelope-peak error " + fmt(worst_peak) + " samples (limit 1)"};
}

// ---------------------------------------------------------------------------
// 3. Lateral resolution scales with the aperture.

Outcome aperture_law(Context& ctx) {
  const Scene s = point_scene(ctx.cfg, {0.0, ctx.cfg.tx_focus_mm * 1e-3});
  bool ok = true;
  std::string detail;
  for (Technique t : kTechniques) {
    const Paired p = acquire_pair(ctx.cfg, t, s, false);
    const double fs_ = point_quality(das_image(p.small, s.grid, {ctx.cfg.interp}), s.targets[0]).fwhm_mm;
    const double fl = point_quality(das_image(p.large, s.grid, {ctx.cfg.interp}), s.targets[0]).fwhm_mm;
    const double ratio = fs_ / fl;
    ok = ok && ratio >= 1.6 && ratio <= 2.4;
    detail += name(t) + " " + fmt(fs_) + "/" + fmt(fl) + " mm = " + fmt(ratio, 2) + "; ";
  }
  return {ok, detail + "bounds [1.6, 2.4]"};
}

// ---------------------------------------------------------------------------
// 4. Backpropagation against finite differences.

Outcome gradient_check(Context&) {
  double worst = 0.0;
  std::mt19937_64 rng(404);
  std::normal_distribution<double> g;
  std::set<LayerKind> kinds;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto net = oracle::random_mixed_network(1000 + i);
    for (const auto& L : net.layers) kinds.insert(L.kind);
    const std::size_t batch = 1 + i % 3;
    std::vector<double> in(batch * net.input_size), tgt(batch * net.output_size());
    for (double& v : in) v = g(rng);
    for (double& v : tgt) v = g(rng);
    worst = std::max(worst, oracle::gradient_check(net, in, tgt, batch));
  }
  const bool all_kinds = kinds.size() == 4;
  char err[32];
  std::snprintf(err, sizeof err, "%.2e", worst);
  return {worst < 1e-4 && all_kinds, "50 networks, " + std::to_string(kinds.size()) +
                                         " layer kinds, max relative error " + err + " (limit 1e-4)"};
}

// ---------------------------------------------------------------------------
// 5. The pipeline with ground-truth patches is large-aperture DAS.

double peak_normalized_rms(const SectorImage& a, const SectorImage& b) {
  double se = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    se += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    peak = std::max(peak, b.values[i]);
  }
  return std::sqrt(se / static_cast<double>(a.values.size())) / peak;
}

Outcome oracle_equivalence(Context& ctx) {
  const Scene s = points_scene(ctx.cfg);
  bool ok = true;
  std::string detail;
  for (Technique t : kTechniques) {
    const Paired p = acquire_pair(ctx.cfg, t, s, true);
    const OracleEmulator oracle(p.large.source(), ctx.cfg.patch_len);
    const auto dnnb = dnnb_reconstruct(p.small.source(), oracle, s.grid, {ctx.cfg.overlap_radius});
    const double e = peak_normalized_rms(dnnb, das_image(p.large, s.grid, {ctx.cfg.interp}));
    ok = ok && e < 0.02;
    detail += name(t) + " " + fmt(100.0 * e, 3) + "%; ";
  }
  return {ok, detail + "limit 2%"};
}

// ---------------------------------------------------------------------------
// 6. Training reduces the validation loss.

Outcome training_efficacy(Context& ctx) {
  bool ok = true;
  std::string detail;
  for (Technique t : kTechniques) {
    const auto& m = ctx.model(t);
    const auto& h = m.history;
    const bool epochs_ok = h.size() == ctx.cfg.epochs;
    const double first = h.front().val_loss, last = h.back().val_loss;
    bool fired = false, monotone = true, train_monotone = true;
    for (std::size_t e = 0; e < h.size(); ++e) {
      fired = fired || h[e].lr_reduced;
      if (e > 0 && h[e].val_loss > h[e - 1].val_loss) monotone = false;
      if (e > 0 && h[e].train_loss > h[e - 1].train_loss) train_monotone = false;
    }
    const double secs = ctx.train_seconds[t];
    const bool this_ok = epochs_ok && last <= 0.5 * first && (fired || monotone) && secs <= 1200.0;
    ok = ok && this_ok;
    detail += name(t) + ": val " + format_number(first, 5) + " -> " + format_number(last, 5) + " (" +
              fmt(last / first, 3) + "x), " +
              (fired ? "plateau fired" : monotone ? "val monotone" : "no plateau, val not monotone") +
              (train_monotone ? " (train monotone)" : "") + ", " + fmt(secs, 0) + " s; ";
  }
  return {ok, detail + "limits 0.5x, 1200 s per network"};
}

// ---------------------------------------------------------------------------
// 7. Point target: narrower mainlobe and lower sidelobes than small DAS.

Outcome point_trend(Context& ctx) {
  const Scene s = point_scene(ctx.cfg, {ctx.cfg.points_mm.front().x * 1e-3, ctx.cfg.points_mm.front().z * 1e-3});
  bool ok = true;
  std::string detail;
  for (Technique t : kTechniques) {
    const Network& net = ctx.model(t).net;
    const auto t0 = Clock::now();
    const Paired p = acquire_pair(ctx.cfg, t, s, true);
    const auto das = point_quality(das_image(p.small, s.grid, {ctx.cfg.interp}), s.targets[0]);
    const auto nn = point_quality(dnnb_image(p.small, net, s.grid, {ctx.cfg.overlap_radius}), s.targets[0]);
    const bool this_ok = nn.fwhm_mm < das.fwhm_mm && nn.rms_sll_db <= das.rms_sll_db - 3.0;
    ok = ok && this_ok;
    detail += name(t) + ": FWHM " + fmt(nn.fwhm_mm) + " vs " + fmt(das.fwhm_mm) + " mm, SLL " +
              fmt(nn.rms_sll_db, 2) + " vs " + fmt(das.rms_sll_db, 2) + " dB" + (this_ok ? "" : " [miss]") +
              " (" + fmt(seconds_since(t0), 1) + " s); ";
  }
  return {ok, detail + "need FWHM lower and SLL at least 3 dB lower"};
}

// ---------------------------------------------------------------------------
// 8. Cyst: deeper contrast and higher CNR than small DAS.

Outcome cyst_trend(Context& ctx) {
  const Scene s = cyst_scene(ctx.cfg);
  bool ok = true;
  std::string detail;
  for (Technique t : kTechniques) {
    const Network& net = ctx.model(t).net;
    const auto small = ctx.cfg.small_array();
    const Acquisition a = acquire(t, s.phantom, small, small, ctx.cfg.pulse(), ctx.cfg.acquisition(), s.grid.angles);
    const auto das = contrast_quality(das_image(a, s.grid, {ctx.cfg.interp}), s);
    const auto nn = contrast_quality(dnnb_image(a, net, s.grid, {ctx.cfg.overlap_radius}), s);
    const bool this_ok = nn.cr_db < das.cr_db && nn.cnr > das.cnr;
    ok = ok && this_ok;
    detail += name(t) + ": CR " + fmt(nn.cr_db, 2) + " vs " + fmt(das.cr_db, 2) + " dB, CNR " + fmt(nn.cnr) +
              " vs " + fmt(das.cnr) + (this_ok ? "" : " [miss]") + "; ";
  }
  return {ok, detail + "need CR lower and CNR higher"};
}

// ---------------------------------------------------------------------------
// 9. Receive-aperture reduction.

Outcome aperture_trend(Context& ctx) {
  const auto rows = aperture_sweep(ctx.cfg, [&](const EmulationSetup& setup, int factor) {
    TrainedModel m = train_emulator(ctx.cfg, setup, ctx.cfg.seed + static_cast<std::uint64_t>(factor), ctx.verbose);
    save_weights(m.net, ctx.work / ("weights_f" + std::to_string(factor) + ".usbf"));
    return m.net;
  });
  std::ofstream(ctx.work / "aperture_sweep.csv") << aperture_csv(rows);
  bool das_monotone = true, dnnb_above = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].das.cnr > rows[i - 1].das.cnr) das_monotone = false;
    if (rows[i].dnnb.cnr < rows[i].das.cnr) dnnb_above = false;
    detail += "f" + std::to_string(rows[i].factor) + " (" + std::to_string(rows[i].n_rx) + " rx): DAS " +
              fmt(rows[i].das.cnr) + ", DNNB " + fmt(rows[i].dnnb.cnr) + "; ";
  }
  return {das_monotone && dnnb_above,
          detail + "DAS CNR non-increasing: " + (das_monotone ? "yes" : "no") +
              ", DNNB >= DAS everywhere: " + (dnnb_above ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 10. Metric arithmetic.

Outcome metric_cases(Context&) {
  std::vector<double> x, a;
  for (int i = -6; i <= 6; ++i) {
    x.push_back(0.5 * i);
    a.push_back(std::max(0.0, 1.0 - std::abs(0.5 * i) / 2.0));
  }
  const double w = fwhm(make_profile(x, a));
  const double c = cr(RegionStats{0.1, 0.0, 4}, RegionStats{1.0, 0.0, 4});
  const double n = cnr(RegionStats{1.0, 1.0, 4}, RegionStats{2.0, 1.0, 4});
  const bool ok = w == 2.0 && std::abs(c + 20.0) < 1e-12 && std::abs(n - 1.0 / std::sqrt(2.0)) < 1e-15;
  return {ok, "triangle FWHM " + format_number(w, 12) + " mm, CR " + format_number(c, 12) + " dB, CNR " +
                  format_number(n, 12)};
}

// ---------------------------------------------------------------------------
// 11. Every command reproduces its output files byte for byte.

std::string quote(const std::string& s) { return "'" + s + "'"; }

bool run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = quote(cli) + " " + args + " >>" + quote(log.string()) + " 2>&1";
  return std::system(cmd.c_str()) == 0;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "commands.log") continue;
    std::ifstream f(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  return files;
}

Outcome reproducibility(Context& ctx) {
  if (ctx.cli.empty()) return {false, "no command-line tool given (--cli)"};
  ExperimentConfig mini = ctx.cfg;
  mini.pairs = 192;
  mini.epochs = 2;
  mini.scatterers = 800;
  const fs::path base = ctx.work / "reproducibility";
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path ini = base / "mini.ini";
  mini.save(ini);

  std::vector<std::string> failures;
  for (const char* run : {"run1", "run2"}) {
    const fs::path d = base / run;
    fs::create_directories(d);
    const fs::path log = d / "commands.log";
    const std::string c = "-c " + quote(ini.string()) + " -o ";
    const auto o = [&](const char* sub) { return quote((d / sub).string()); };
    const std::vector<std::string> steps = {
        "simulate --phantom point " + c + o("point"),
        "simulate --phantom cyst -t pa " + c + o("cyst"),
        "build-dataset " + c + o("dataset"),
        "train --dataset " + quote((d / "dataset" / "dataset.usbf").string()) + " " + c + o("train"),
        "reconstruct --method das --data " + quote((d / "point" / "channels.usbf").string()) + " " + c + o("das"),
        "reconstruct --weights " + quote((d / "train" / "weights.usbf").string()) + " --data " +
            quote((d / "point" / "channels.usbf").string()) + " " + c + o("dnnb"),
        "evaluate --scene point --image " + quote((d / "das" / "envelope.usbf").string()) + " " + c + o("eval"),
        "sweep-depth " + c + o("depth"),
        "sweep-aperture " + c + o("aperture"),
    };
    for (const auto& s : steps)
      if (!run_cli(ctx.cli, s, log)) failures.push_back(std::string(run) + ": usbf " + s.substr(0, s.find(' ')));
  }
  if (!failures.empty()) return {false, "command failed: " + failures.front() + " (see reproducibility/*/commands.log)"};
  const auto a = read_tree(base / "run1"), b = read_tree(base / "run2");
  std::size_t differ = 0;
  std::string first;
  for (const auto& [path, bytes] : a) {
    const auto it = b.find(path);
    if (it == b.end() || it->second != bytes) {
      if (first.empty()) first = path;
      ++differ;
    }
  }
  if (a.size() != b.size()) ++differ;
  return {differ == 0 && !a.empty(), std::to_string(a.size()) + " files from 9 commands, " + std::to_string(differ) +
                                         " differ" + (first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance checks for the beamforming library");
  Context ctx;
  std::string config;
  std::vector<int> only;
  app.add_option("--cli", ctx.cli, "Path of the usbf command-line tool (criterion 11)");
  app.add_option("--work", ctx.work, "Scratch directory for weights and reports")->required();
  app.add_option("--config", config, "Experiment configuration (default: desk preset)");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("-v,--verbose", ctx.verbose, "Training progress on stderr");
  CLI11_PARSE(app, argc, argv);
  if (!config.empty()) ctx.cfg = ExperimentConfig::load(config);
  fs::create_directories(ctx.work);

  // Criteria 7 and 8 are timed after training; criterion 6 trains the networks.
  const std::vector<Criterion> criteria = {
      {1, "SA/STA identity", 10, [&] { return sa_sta_identity(ctx); }},
      {2, "echo geometry", 30, [&] { return echo_geometry(ctx); }},
      {3, "aperture-resolution law", 300, [&] { return aperture_law(ctx); }},
      {4, "gradient check", 60, [&] { return gradient_check(ctx); }},
      {5, "oracle pipeline equivalence", 120, [&] { return oracle_equivalence(ctx); }},
      {6, "training efficacy", 3 * 1200, [&] { return training_efficacy(ctx); }},
      {7, "point-target trend", 300, [&] { return point_trend(ctx); }},
      {8, "cyst trend", 600, [&] { return cyst_trend(ctx); }},
      {9, "aperture-reduction trend", 900, [&] { return aperture_trend(ctx); }},
      {10, "metric arithmetic", 1, [&] { return metric_cases(ctx); }},
      {11, "reproducibility", 300, [&] { return reproducibility(ctx); }},
  };

  std::ostringstream report;
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    if ((c.id == 7 || c.id == 8))
      for (Technique t : kTechniques) ctx.model(t);
    const auto t0 = Clock::now();
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs <= c.limit_s;
    const bool pass = r.pass && in_time;
    failed += !pass;
    std::ostringstream line;
    line << (pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.title << ": " << r.detail << " | " << fmt(secs, 1)
         << " s (limit " << fmt(c.limit_s, 0) << " s" << (in_time ? "" : ", exceeded") << ")";
    std::cout << line.str() << std::endl;
    report << line.str() << '\n';
  }
  std::ofstream(ctx.work / "acceptance_report.txt") << report.str();
  return failed == 0 ? 0 : 1;
}
