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

#include "usbf/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "usbf/errors.hpp"

namespace usbf {

ChannelSource Acquisition::source() const {
  switch (technique) {
    case Technique::SA: return ChannelSource::sa(std::get<SAChannelData>(data), rx, cfg);
    case Technique::STA: return ChannelSource::sta(std::get<STAChannelData>(data), tx, rx, cfg);
    case Technique::PA: return ChannelSource::pa(std::get<PAChannelData>(data), tx, rx, cfg);
  }
  throw InvalidArgument("unknown technique");
}

Acquisition Acquisition::receive_subset(int factor, SubsetMode mode) const {
  Acquisition out = *this;
  out.rx = subset_array(rx, factor, mode);
  switch (technique) {
    case Technique::SA: throw InvalidArgument("SA data has no separate receive aperture to reduce");
    case Technique::STA: out.data = usbf::receive_subset(std::get<STAChannelData>(data), factor, mode); break;
    case Technique::PA: out.data = usbf::receive_subset(std::get<PAChannelData>(data), factor, mode); break;
  }
  return out;
}

Acquisition acquire(Technique t, const Phantom& phantom, const ArrayGeometry& tx,
                    const ArrayGeometry& rx, const PulseWaveform& pulse,
                    const AcquisitionConfig& cfg, const std::vector<double>& pa_angles) {
  Acquisition a;
  a.technique = t;
  a.tx = tx;
  a.rx = rx;
  a.cfg = cfg;
  switch (t) {
    case Technique::SA:
      if (tx.element_x != rx.element_x) throw InvalidArgument("SA transmits and receives on the same elements");
      a.data = simulate_sa(phantom, rx, pulse, cfg);
      break;
    case Technique::STA: a.data = simulate_sta(phantom, tx, rx, pulse, cfg); break;
    case Technique::PA: a.data = simulate_pa(phantom, tx, rx, pulse, cfg, pa_angles); break;
  }
  return a;
}

namespace {

void check_pa_grid(const PAChannelData& d, const SectorGrid& grid) {
  if (d.line_angles.size() != grid.n_lines())
    throw InvalidArgument("PA grid lines must be the acquisition lines");
  for (std::size_t l = 0; l < grid.n_lines(); ++l)
    if (std::abs(d.line_angles[l] - grid.angles[l]) > 1e-12)
      throw InvalidArgument("PA grid lines must be the acquisition lines");
}

}  // namespace

SectorImage das_image(const Acquisition& acq, const SectorGrid& grid, DasOptions opt) {
  switch (acq.technique) {
    case Technique::SA: return das_sa(std::get<SAChannelData>(acq.data), acq.rx, acq.cfg, grid, opt);
    case Technique::STA:
      return das_sta(std::get<STAChannelData>(acq.data), acq.tx, acq.rx, acq.cfg, grid, opt);
    case Technique::PA: {
      const auto& d = std::get<PAChannelData>(acq.data);
      check_pa_grid(d, grid);
      return das_pa(d, acq.tx, acq.rx, acq.cfg, grid.depths, opt);
    }
  }
  throw InvalidArgument("unknown technique");
}

SectorImage dnnb_image(const Acquisition& acq, const Network& net, const SectorGrid& grid,
                       DnnbOptions opt) {
  const NetworkEmulator emu(net, acq.technique);
  return dnnb_reconstruct(acq.source(), emu, grid, opt);
}

namespace {

double depth_step(const ExperimentConfig& cfg) {
  const auto a = cfg.acquisition();
  return a.c / (2.0 * a.fs);
}

}  // namespace

Scene point_scene(const ExperimentConfig& cfg, Point2 target) {
  Scene s;
  s.name = "point";
  s.phantom = make_point_phantom({{target.x, target.z, 1.0}});
  s.targets = {target};
  const double theta = std::atan2(target.x, target.z);
  const double range = std::hypot(target.x, target.z);
  const double half = 0.5 * deg_to_rad(cfg.point_sector_deg);
  const double margin = cfg.point_depth_margin_mm * 1e-3;
  s.grid = make_sector_grid(theta - half, theta + half, cfg.point_lines,
                            std::max(depth_step(cfg), range - margin), range + margin,
                            depth_step(cfg));
  return s;
}

Scene points_scene(const ExperimentConfig& cfg) {
  if (cfg.points_mm.empty()) throw ConfigError("no point targets configured");
  std::vector<Scatterer> pts;
  double rmin = 1e9, rmax = 0.0;
  for (const auto& p : cfg.points_mm) {
    pts.push_back({p.x * 1e-3, p.z * 1e-3, 1.0});
    const double r = std::hypot(p.x, p.z) * 1e-3;
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  const Point2 first{pts.front().x, pts.front().z};
  Scene s = point_scene(cfg, first);
  s.phantom = make_point_phantom(pts);
  s.targets.clear();
  for (const auto& p : pts) s.targets.push_back({p.x, p.z});
  const double margin = cfg.point_depth_margin_mm * 1e-3;
  s.grid = make_sector_grid(s.grid.angles.front(), s.grid.angles.back(), s.grid.n_lines(),
                            std::max(depth_step(cfg), rmin - margin), rmax + margin, depth_step(cfg));
  return s;
}

Scene cyst_scene(const ExperimentConfig& cfg) {
  Scene s;
  s.name = "cyst";
  const Point2 c{cfg.cyst_x_mm * 1e-3, cfg.cyst_z_mm * 1e-3};
  const double r = cfg.cyst_radius_mm * 1e-3;
  const Rect region{c.x - cfg.region_half_width_mm * 1e-3, c.x + cfg.region_half_width_mm * 1e-3,
                    cfg.region_z_min_mm * 1e-3, cfg.region_z_max_mm * 1e-3};
  s.phantom = make_cyst_phantom(region, c, r, cfg.scatterers, cfg.seed);
  s.cyst = Region::disc(c, cfg.cyst_inner_fraction * r);
  s.background = Region::annulus(c, cfg.background_inner_fraction * r, cfg.background_outer_fraction * r);
  const double theta = std::atan2(c.x, c.z);
  const double range = std::hypot(c.x, c.z);
  const double half = 0.5 * deg_to_rad(cfg.cyst_sector_deg);
  const double reach = cfg.background_outer_fraction * r + 1e-3;
  s.grid = make_sector_grid(theta - half, theta + half, cfg.cyst_lines, range - reach,
                            range + reach, depth_step(cfg));
  return s;
}

Scene empty_scene(const ExperimentConfig& cfg) {
  Scene s;
  s.name = "empty";
  s.grid = default_grid(cfg.acquisition());
  return s;
}

Scene make_scene(const ExperimentConfig& cfg, const std::string& name) {
  if (name == "point") return points_scene(cfg);
  if (name == "cyst") return cyst_scene(cfg);
  if (name == "empty") return empty_scene(cfg);
  throw InvalidArgument("unknown scene '" + name + "' (expected point, cyst or empty)");
}

TrainedModel train_emulator(const ExperimentConfig& cfg, const EmulationSetup& setup,
                            std::uint64_t seed, bool verbose) {
  const Dataset ds = build_dataset(cfg.pairs, cfg.sidelobe_mix, seed, setup);
  Network net = init_network(setup.shape(), seed + 1, cfg.network());
  TrainConfig tc = cfg.training();
  tc.seed = seed + 2;
  tc.verbose = verbose;
  TrainResult r = train(std::move(net), ds.to_patch_dataset(), tc);
  r.net.task_tag = technique_tag(setup.technique);
  return {std::move(r.net), std::move(r.history)};
}

ImageQuality point_quality(const SectorImage& img, Point2 target) {
  const LateralProfile prof = lateral_profile(img, target);
  return {fwhm(prof), rms_sidelobe(prof)};
}

ContrastQuality contrast_quality(const SectorImage& img, const Scene& scene) {
  if (!scene.cyst || !scene.background) throw InvalidArgument("scene has no cyst regions");
  return {cr(img, *scene.cyst, *scene.background), cnr(img, *scene.cyst, *scene.background)};
}

EmulationSetup aperture_setup(const ExperimentConfig& cfg, int factor) {
  if (cfg.aperture_technique == Technique::SA)
    throw ConfigError("the aperture study needs a technique with a receive aperture (sta or pa)");
  const ArrayGeometry small = cfg.small_array();
  EmulationSetup s = EmulationSetup::receive_reduction(cfg.aperture_technique, small, small, factor,
                                                       cfg.subset_mode, cfg.pulse(),
                                                       cfg.acquisition(), cfg.patch_len);
  s.focus_jitter = cfg.focus_jitter;
  return s;
}

std::vector<ApertureRow> aperture_sweep(
    const ExperimentConfig& cfg,
    const std::function<Network(const EmulationSetup& setup, int factor)>& network_for) {
  const Scene scene = cyst_scene(cfg);
  const ArrayGeometry small = cfg.small_array();
  const Acquisition full = acquire(cfg.aperture_technique, scene.phantom, small, small, cfg.pulse(),
                                   cfg.acquisition(), scene.grid.angles);
  std::vector<ApertureRow> rows;
  for (int f : cfg.aperture_factors) {
    const Acquisition sub = full.receive_subset(f, cfg.subset_mode);
    const EmulationSetup setup = aperture_setup(cfg, f);
    ApertureRow row;
    row.factor = f;
    row.n_rx = sub.rx.size();
    row.das = contrast_quality(das_image(sub, scene.grid, {cfg.interp}), scene);
    row.dnnb = contrast_quality(dnnb_image(sub, network_for(setup, f), scene.grid, {cfg.overlap_radius}), scene);
    rows.push_back(row);
  }
  return rows;
}

std::string aperture_csv(const std::vector<ApertureRow>& rows) {
  std::string out = "factor,n_rx,das_cr_db,das_cnr,dnnb_cr_db,dnnb_cnr\n";
  for (const auto& r : rows)
    out += std::to_string(r.factor) + ',' + std::to_string(r.n_rx) + ',' +
           format_number(r.das.cr_db, 4) + ',' + format_number(r.das.cnr, 6) + ',' +
           format_number(r.dnnb.cr_db, 4) + ',' + format_number(r.dnnb.cnr, 6) + '\n';
  return out;
}

}  // namespace usbf
