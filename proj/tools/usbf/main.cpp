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

// usbf: simulate, train and evaluate learned aperture emulation for ultrasound
// beamforming. Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

void add_common(CLI::App* cmd, usbf::cli::CommonOptions& c) {
  cmd->add_option("-c,--config", c.config, "Experiment configuration (default: desk preset)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-t,--technique", c.technique, "Override [experiment] technique: sa, sta or pa");
  cmd->add_option("-s,--seed", c.seed, "Override [experiment] seed");
  cmd->add_option("-o,--out", c.out, "Output directory")->required();
  cmd->add_flag("-v,--verbose", c.verbose, "Progress on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace usbf::cli;
  CLI::App app{"usbf: learned large-aperture emulation for ultrasound beamforming"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  CommonOptions common;
  SimulateOptions sim;
  TrainOptions tr;
  ReconstructOptions rec;
  EvaluateOptions ev;
  SweepDepthOptions sd;
  SweepApertureOptions sa;

  auto* c_sim = app.add_subcommand("simulate", "Simulate channel data for a phantom");
  add_common(c_sim, common);
  c_sim->add_option("--phantom", sim.phantom, "point, cyst or empty")
      ->check(CLI::IsMember({"point", "cyst", "empty"}));
  c_sim->add_option("--array", sim.array, "small or large")->check(CLI::IsMember({"small", "large"}));

  auto* c_ds = app.add_subcommand("build-dataset", "Generate training pairs");
  add_common(c_ds, common);

  auto* c_tr = app.add_subcommand("train", "Train an emulation network on a dataset");
  add_common(c_tr, common);
  c_tr->add_option("--dataset", tr.dataset, "Dataset file from build-dataset")->required();

  auto* c_rec = app.add_subcommand("reconstruct", "DAS or DNNB image from channel data");
  add_common(c_rec, common);
  c_rec->add_option("--data", rec.data, "Channel file from simulate")->required();
  c_rec->add_option("--weights", rec.weights, "Network weights (selects DNNB)");
  c_rec->add_option("--method", rec.method, "das or dnnb")->check(CLI::IsMember({"das", "dnnb"}));

  auto* c_ev = app.add_subcommand("evaluate", "Resolution and contrast metrics of an image");
  add_common(c_ev, common);
  c_ev->add_option("--image", ev.image, "envelope.usbf from reconstruct")->required();
  c_ev->add_option("--scene", ev.scene, "point or cyst")->check(CLI::IsMember({"point", "cyst"}));

  auto* c_sd = app.add_subcommand("sweep-depth", "FWHM and sidelobe level against depth");
  add_common(c_sd, common);
  c_sd->add_option("--weights", sd.weights, "Network weights; adds DNNB rows");

  auto* c_sa = app.add_subcommand("sweep-aperture", "Cyst contrast against receive-aperture reduction");
  add_common(c_sa, common);
  c_sa->add_option("--weights-dir", sa.weights_dir,
                   "Directory with weights_f<factor>.usbf; missing networks are trained");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usbf: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const auto* sub : app.get_subcommands()) failed = sub;
    std::cerr << (failed == &app ? app.help() : failed->help("usbf"));
    return 2;
  }

  try {
    if (*c_sim) cmd_simulate(common, sim);
    else if (*c_ds) cmd_build_dataset(common);
    else if (*c_tr) cmd_train(common, tr);
    else if (*c_rec) cmd_reconstruct(common, rec);
    else if (*c_ev) cmd_evaluate(common, ev);
    else if (*c_sd) cmd_sweep_depth(common, sd);
    else if (*c_sa) cmd_sweep_aperture(common, sa);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "usbf: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
