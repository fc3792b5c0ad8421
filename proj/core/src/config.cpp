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

#include "usbf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "usbf/errors.hpp"

namespace usbf {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty())
    throw InvalidArgument("expected a number, got '" + s + "'");
  return v;
}

template <class T>
T parse_int(const std::string& s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty())
    throw InvalidArgument("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InvalidArgument("expected true or false, got '" + s + "'");
}

std::string_view subset_name(SubsetMode m) { return m == SubsetMode::Stride ? "stride" : "center"; }
SubsetMode parse_subset(const std::string& s) {
  if (s == "stride") return SubsetMode::Stride;
  if (s == "center") return SubsetMode::CenterContiguous;
  throw InvalidArgument("expected stride or center, got '" + s + "'");
}

std::string_view interp_name(Interp i) { return i == Interp::Linear ? "linear" : "cubic"; }
Interp parse_interp(const std::string& s) {
  if (s == "linear") return Interp::Linear;
  if (s == "cubic") return Interp::Cubic;
  throw InvalidArgument("expected linear or cubic, got '" + s + "'");
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

template <class T>
Field int_field(std::string sec, std::string key, T& ref) {
  return {std::move(sec), std::move(key), [&ref] { return fmt_int(ref); },
          [&ref](const std::string& s) { ref = parse_int<T>(s); }};
}

Field num_field(std::string sec, std::string key, double& ref) {
  return {std::move(sec), std::move(key), [&ref] { return fmt(ref); },
          [&ref](const std::string& s) { ref = parse_double(s); }};
}

Field bool_field(std::string sec, std::string key, bool& ref) {
  return {std::move(sec), std::move(key), [&ref] { return std::string(ref ? "true" : "false"); },
          [&ref](const std::string& s) { ref = parse_bool(s); }};
}

template <class T, class Fmt, class Parse>
Field list_field(std::string sec, std::string key, std::vector<T>& ref, Fmt f, Parse p) {
  return {std::move(sec), std::move(key),
          [&ref, f] {
            std::string out;
            for (std::size_t i = 0; i < ref.size(); ++i) out += (i ? ", " : "") + f(ref[i]);
            return out;
          },
          [&ref, p](const std::string& s) {
            ref.clear();
            if (trim(s).empty()) return;
            for (const auto& item : split(s, ',')) ref.push_back(p(item));
          }};
}

std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f;
  f.push_back({"experiment", "technique", [&c] { return std::string(to_string(c.technique)); },
               [&c](const std::string& s) { c.technique = parse_technique(s); }});
  f.push_back(int_field("experiment", "seed", c.seed));

  f.push_back(num_field("acquisition", "speed_of_sound", c.speed_of_sound));
  f.push_back(num_field("acquisition", "sampling_rate_mhz", c.sampling_rate_mhz));
  f.push_back(num_field("acquisition", "depth_min_mm", c.depth_min_mm));
  f.push_back(num_field("acquisition", "depth_max_mm", c.depth_max_mm));
  f.push_back(num_field("acquisition", "sector_deg", c.sector_deg));
  f.push_back(int_field("acquisition", "scan_lines", c.scan_lines));
  f.push_back(num_field("acquisition", "tx_focus_mm", c.tx_focus_mm));
  f.push_back(bool_field("acquisition", "geometric_spreading", c.geometric_spreading));
  f.push_back(bool_field("acquisition", "pulse_center_reference", c.pulse_center_reference));

  f.push_back(int_field("array", "n_small", c.n_small));
  f.push_back(num_field("array", "element_width_mm", c.element_width_mm));
  f.push_back(num_field("array", "kerf_mm", c.kerf_mm));

  f.push_back(num_field("pulse", "f0_mhz", c.f0_mhz));
  f.push_back(num_field("pulse", "cycles", c.cycles));
  f.push_back({"pulse", "window", [&c] { return std::string(to_string(c.window)); },
               [&c](const std::string& s) { c.window = parse_window(s); }});

  f.push_back(int_field("dataset", "pairs", c.pairs));
  f.push_back(num_field("dataset", "sidelobe_mix", c.sidelobe_mix));
  f.push_back(int_field("dataset", "patch_len", c.patch_len));
  f.push_back(num_field("dataset", "focus_jitter", c.focus_jitter));

  const auto size_fmt = [](std::size_t v) { return std::to_string(v); };
  const auto size_parse = [](const std::string& s) { return parse_int<std::size_t>(s); };
  f.push_back(list_field("network", "dense_widths", c.dense_widths, size_fmt, size_parse));
  f.push_back(list_field("network", "conv_maps", c.conv_maps, size_fmt, size_parse));
  f.push_back(int_field("network", "kernel", c.kernel));
  f.push_back(num_field("network", "leaky_slope", c.leaky_slope));

  f.push_back(int_field("train", "epochs", c.epochs));
  f.push_back(int_field("train", "batch_size", c.batch_size));
  f.push_back(num_field("train", "learning_rate", c.learning_rate));
  f.push_back(num_field("train", "decay", c.decay));
  f.push_back(num_field("train", "validation_fraction", c.validation_fraction));
  f.push_back(int_field("train", "plateau_patience", c.plateau_patience));
  f.push_back(num_field("train", "plateau_factor", c.plateau_factor));
  f.push_back(num_field("train", "plateau_min_delta", c.plateau_min_delta));

  f.push_back(num_field("imaging", "dynamic_range_db", c.dynamic_range_db));
  f.push_back(num_field("imaging", "pixel_pitch_mm", c.pixel_pitch_mm));
  f.push_back({"imaging", "interp", [&c] { return std::string(interp_name(c.interp)); },
               [&c](const std::string& s) { c.interp = parse_interp(s); }});
  f.push_back(int_field("imaging", "overlap_radius", c.overlap_radius));

  f.push_back(list_field(
      "phantom", "points_mm", c.points_mm,
      [](const PointMm& p) { return fmt(p.x) + ":" + fmt(p.z); },
      [](const std::string& s) {
        const auto xz = split(s, ':');
        if (xz.size() != 2) throw InvalidArgument("expected x:z, got '" + s + "'");
        return PointMm{parse_double(xz[0]), parse_double(xz[1])};
      }));
  f.push_back(num_field("phantom", "cyst_x_mm", c.cyst_x_mm));
  f.push_back(num_field("phantom", "cyst_z_mm", c.cyst_z_mm));
  f.push_back(num_field("phantom", "cyst_radius_mm", c.cyst_radius_mm));
  f.push_back(num_field("phantom", "region_half_width_mm", c.region_half_width_mm));
  f.push_back(num_field("phantom", "region_z_min_mm", c.region_z_min_mm));
  f.push_back(num_field("phantom", "region_z_max_mm", c.region_z_max_mm));
  f.push_back(int_field("phantom", "scatterers", c.scatterers));
  f.push_back(num_field("phantom", "cyst_inner_fraction", c.cyst_inner_fraction));
  f.push_back(num_field("phantom", "background_inner_fraction", c.background_inner_fraction));
  f.push_back(num_field("phantom", "background_outer_fraction", c.background_outer_fraction));

  f.push_back(num_field("scan", "point_sector_deg", c.point_sector_deg));
  f.push_back(int_field("scan", "point_lines", c.point_lines));
  f.push_back(num_field("scan", "point_depth_margin_mm", c.point_depth_margin_mm));
  f.push_back(num_field("scan", "cyst_sector_deg", c.cyst_sector_deg));
  f.push_back(int_field("scan", "cyst_lines", c.cyst_lines));

  f.push_back(list_field("sweep", "depths_mm", c.depths_mm, [](double v) { return fmt(v); },
                         [](const std::string& s) { return parse_double(s); }));
  f.push_back(list_field("sweep", "aperture_factors", c.aperture_factors,
                         [](int v) { return std::to_string(v); },
                         [](const std::string& s) { return parse_int<int>(s); }));
  f.push_back({"sweep", "subset", [&c] { return std::string(subset_name(c.subset_mode)); },
               [&c](const std::string& s) { c.subset_mode = parse_subset(s); }});
  f.push_back({"sweep", "aperture_technique",
               [&c] { return std::string(to_string(c.aperture_technique)); },
               [&c](const std::string& s) { c.aperture_technique = parse_technique(s); }});
  return f;
}

}  // namespace

ExperimentConfig ExperimentConfig::desk() { return {}; }

ExperimentConfig ExperimentConfig::full_scale() {
  ExperimentConfig c;
  c.n_small = 33;
  c.scan_lines = 65;
  c.pairs = 30000;
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  auto fs = fields(c);
  std::map<std::pair<std::string, std::string>, Field*> index;
  std::set<std::string> sections;
  for (auto& f : fs) {
    index[{f.section, f.key}] = &f;
    sections.insert(f.section);
  }
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      if (!sections.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = index.find({section, key});
    if (it == index.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert({section, key}).second)
      throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
    try {
      it->second->set(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string ExperimentConfig::to_text() const {
  ExperimentConfig copy = *this;
  const auto fs = fields(copy);
  std::string out;
  std::string section;
  for (const auto& f : fs) {
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + ("[" + f.section + "]\n");
      section = f.section;
    }
    out += f.key + " = " + f.get() + "\n";
  }
  return out;
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write config " + path.string());
  f << to_text();
  if (!f) throw IoError("failed writing config " + path.string());
}

void ExperimentConfig::validate() const {
  acquisition().validate();
  if (n_small < 1) throw InvalidArgument("n_small must be at least 1");
  if (element_width_mm < 0.0 || kerf_mm < 0.0 || !(pitch() > 0.0))
    throw InvalidArgument("array pitch must be positive");
  (void)pulse();
  if (pairs < 1) throw InvalidArgument("dataset needs at least one pair");
  if (!(sidelobe_mix >= 0.0 && sidelobe_mix <= 1.0)) throw InvalidArgument("sidelobe_mix must lie in [0, 1]");
  if (patch_len < 2) throw InvalidArgument("patch_len must be at least 2");
  if (overlap_radius + patch_len / 2 >= patch_len)
    throw InvalidArgument("overlap_radius must stay inside the patch");
  if (!(focus_jitter >= 0.0)) throw InvalidArgument("focus_jitter must be non-negative");
  if (kernel % 2 == 0) throw InvalidArgument("kernel must be odd");
  if (epochs < 1 || batch_size < 1) throw InvalidArgument("epochs and batch_size must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw InvalidArgument("validation_fraction must lie in [0, 1)");
  if (!(dynamic_range_db > 0.0)) throw InvalidArgument("dynamic_range_db must be positive");
  if (!(pixel_pitch_mm > 0.0)) throw InvalidArgument("pixel_pitch_mm must be positive");
  for (const auto& p : points_mm)
    if (!(p.z > 0.0)) throw InvalidArgument("point targets must lie below the array");
  if (!(cyst_radius_mm > 0.0)) throw InvalidArgument("cyst radius must be positive");
  if (!(cyst_inner_fraction > 0.0 && cyst_inner_fraction <= 1.0 &&
        background_inner_fraction >= 1.0 && background_outer_fraction > background_inner_fraction))
    throw InvalidArgument("cyst statistics regions must be a disc inside the cyst and an annulus outside it");
  if (point_lines < 3 || cyst_lines < 3) throw InvalidArgument("scene grids need at least three lines");
  for (int f : aperture_factors)
    if (f != 1 && f != 2 && f != 4 && f != 8) throw InvalidArgument("aperture factors must be 1, 2, 4 or 8");
}

PulseWaveform ExperimentConfig::pulse() const {
  return make_pulse(f0_mhz * 1e6, cycles, sampling_rate_mhz * 1e6, window);
}

AcquisitionConfig ExperimentConfig::acquisition() const {
  AcquisitionConfig a;
  a.c = speed_of_sound;
  a.fs = sampling_rate_mhz * 1e6;
  a.depth_min = depth_min_mm * 1e-3;
  a.depth_max = depth_max_mm * 1e-3;
  a.sector_angle = deg_to_rad(sector_deg);
  a.n_scan_lines = scan_lines;
  a.tx_focus_depth = tx_focus_mm * 1e-3;
  a.geometric_spreading = geometric_spreading;
  a.echo_delay = pulse_center_reference && f0_mhz > 0.0 ? 0.5 * cycles / (f0_mhz * 1e6) : 0.0;
  return a;
}

ArrayGeometry ExperimentConfig::small_array() const {
  return make_linear_array(n_small, element_width_mm * 1e-3, kerf_mm * 1e-3);
}

ArrayGeometry ExperimentConfig::large_array() const {
  return make_linear_array(2 * n_small - 1, element_width_mm * 1e-3, kerf_mm * 1e-3);
}

NetworkConfig ExperimentConfig::network() const {
  NetworkConfig n;
  n.dense_widths = dense_widths;
  n.conv_maps = conv_maps;
  n.kernel = kernel;
  n.leaky_slope = leaky_slope;
  return n;
}

TrainConfig ExperimentConfig::training(std::uint64_t seed_offset) const {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.decay = decay;
  t.validation_fraction = validation_fraction;
  t.plateau_patience = plateau_patience;
  t.plateau_factor = plateau_factor;
  t.plateau_min_delta = plateau_min_delta;
  t.seed = seed + seed_offset;
  return t;
}

EmulationSetup ExperimentConfig::emulation_setup(Technique t) const {
  EmulationSetup s =
      EmulationSetup::standard(t, n_small, pitch(), pulse(), acquisition(), patch_len);
  s.focus_jitter = focus_jitter;
  s.validate();
  return s;
}

}  // namespace usbf
