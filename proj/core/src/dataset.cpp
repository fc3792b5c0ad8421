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

#include "usbf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <locale>
#include <sstream>

#include "usbf/errors.hpp"
#include "usbf/parallel.hpp"
#include "usbf/tensor_io.hpp"

namespace usbf {
namespace {

double distance(Point2 p, double ex) { return std::hypot(p.x - ex, p.z); }

// Drawn geometry is rounded to float so the stored pair metadata round-trips exactly.
double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

constexpr std::size_t kMetaSize = 12;

ArrayGeometry single_element(double x) {
  ArrayGeometry a;
  a.element_x = {x};
  a.pitch = 0.0;
  return a;
}

}  // namespace

ChannelSource ChannelSource::sa(SAChannelData data, ArrayGeometry array, AcquisitionConfig cfg) {
  if (data.n_positions != array.size())
    throw InvalidArgument("SA data channel count does not match the array");
  ChannelSource s;
  s.technique_ = Technique::SA;
  s.n_tx_ = 1;
  s.n_time_ = data.n_time;
  s.fs_ = data.fs;
  s.samples_ = std::make_shared<const std::vector<float>>(std::move(data.samples));
  s.tx_ = array;
  s.rx_ = std::move(array);
  s.cfg_ = cfg;
  return s;
}

ChannelSource ChannelSource::sta(STAChannelData data, ArrayGeometry tx, ArrayGeometry rx,
                                 AcquisitionConfig cfg) {
  if (data.n_tx != tx.size() || data.n_rx != rx.size())
    throw InvalidArgument("STA data dimensions do not match the arrays");
  ChannelSource s;
  s.technique_ = Technique::STA;
  s.n_tx_ = data.n_tx;
  s.n_time_ = data.n_time;
  s.fs_ = data.fs;
  s.samples_ = std::make_shared<const std::vector<float>>(std::move(data.samples));
  s.tx_ = std::move(tx);
  s.rx_ = std::move(rx);
  s.cfg_ = cfg;
  return s;
}

ChannelSource ChannelSource::pa(PAChannelData data, ArrayGeometry tx, ArrayGeometry rx,
                                AcquisitionConfig cfg) {
  if (data.n_rx != rx.size() || data.n_tx != tx.size())
    throw InvalidArgument("PA data dimensions do not match the arrays");
  if (data.line_angles.size() != data.n_lines)
    throw InvalidArgument("PA data line angle count does not match its lines");
  ChannelSource s;
  s.technique_ = Technique::PA;
  s.n_tx_ = data.n_lines;
  s.n_time_ = data.n_time;
  s.fs_ = data.fs;
  s.samples_ = std::make_shared<const std::vector<float>>(std::move(data.samples));
  s.angles_ = std::move(data.line_angles);
  s.tx_ = std::move(tx);
  s.rx_ = std::move(rx);
  s.cfg_ = cfg;
  s.t0_.reserve(s.angles_.size());
  for (double a : s.angles_) s.t0_.push_back(transmit_time_origin(s.tx_, a, cfg));
  return s;
}

std::size_t ChannelSource::n_events() const { return n_tx_; }

const float* ChannelSource::channel(std::size_t event, std::size_t ch) const {
  return samples_->data() + (event * rx_.size() + ch) * n_time_;
}

void ChannelSource::channel_delays(std::size_t event, FocalPoint fp, double* out) const {
  if (event >= n_events()) throw InvalidArgument("event index out of range");
  const Point2 p = fp.position();
  const double k = fs_ / cfg_.c;
  const double off = cfg_.echo_delay * fs_;
  double tx_part = 0.0;
  switch (technique_) {
    case Technique::SA:
      for (std::size_t j = 0; j < rx_.size(); ++j) out[j] = 2.0 * distance(p, rx_.element_x[j]) * k + off;
      return;
    case Technique::STA: tx_part = distance(p, tx_.element_x[event]) * k; break;
    case Technique::PA: tx_part = t0_[event] * fs_ + fp.range * k; break;
  }
  for (std::size_t j = 0; j < rx_.size(); ++j) out[j] = tx_part + distance(p, rx_.element_x[j]) * k + off;
}

void ChannelSource::focus(std::size_t event, FocalPoint fp, std::size_t n_time, float* out,
                          CoverageReport& coverage) const {
  std::vector<double> u(rx_.size());
  channel_delays(event, fp, u.data());
  const double half = static_cast<double>(n_time / 2);
  for (std::size_t j = 0; j < rx_.size(); ++j) {
    const float* ch = channel(event, j);
    for (std::size_t k = 0; k < n_time; ++k)
      out[j * n_time + k] = static_cast<float>(read_fractional(
          ch, n_time_, u[j] + static_cast<double>(k) - half, Interp::Linear, coverage));
  }
}

FocusedPatch focus_channels(const ChannelSource& source, std::size_t event, FocalPoint fp,
                            std::size_t n_time) {
  if (n_time < 1) throw InvalidArgument("patch length must be positive");
  FocusedPatch p;
  p.n_channels = source.n_channels();
  p.n_time = n_time;
  p.focal_point = fp;
  p.values.resize(p.n_channels * n_time);
  CoverageReport cov;
  source.focus(event, fp, n_time, p.values.data(), cov);
  if (!cov.complete())
    throw InvalidArgument("focal point lies outside the recorded time window (" +
                          std::to_string(cov.out_of_range) + " reads out of range)");
  return p;
}

void normalize(FocusedPatch& patch) {
  float m = 0.0f;
  for (float v : patch.values) m = std::max(m, std::abs(v));
  patch.scale = m > 0.0f ? static_cast<double>(m) : 1.0;
  if (m > 0.0f)
    for (float& v : patch.values) v = static_cast<float>(static_cast<double>(v) / patch.scale);
}

EmulationSetup EmulationSetup::standard(Technique t, std::size_t n_small, double pitch,
                                        PulseWaveform pulse, AcquisitionConfig cfg,
                                        std::size_t patch_len) {
  EmulationSetup s;
  s.technique = t;
  s.rx_small = make_linear_array_pitch(n_small, pitch);
  s.rx_large = make_linear_array_pitch(2 * n_small - 1, pitch);
  s.tx_small = s.rx_small;
  // STA emulates the receive dimension only, so both sides fire the same elements.
  s.tx_large = t == Technique::STA ? s.rx_small : s.rx_large;
  s.pulse = std::move(pulse);
  s.cfg = cfg;
  s.patch_len = patch_len;
  s.validate();
  return s;
}

EmulationSetup EmulationSetup::receive_reduction(Technique t, const ArrayGeometry& tx,
                                                 const ArrayGeometry& rx_full, int factor,
                                                 SubsetMode mode, PulseWaveform pulse,
                                                 AcquisitionConfig cfg, std::size_t patch_len) {
  EmulationSetup s;
  s.technique = t;
  s.tx_small = tx;
  s.tx_large = tx;
  s.rx_small = subset_array(rx_full, factor, mode);
  s.rx_large = make_linear_array_pitch(2 * s.rx_small.size() - 1, s.rx_small.pitch);
  s.pulse = std::move(pulse);
  s.cfg = cfg;
  s.patch_len = patch_len;
  s.validate();
  return s;
}

double EmulationSetup::first_null() const {
  const double d = rx_small.aperture();
  if (!(d > 0.0)) return 0.5 * cfg.sector_angle;
  return std::asin(std::min(1.0, wavelength(cfg, pulse.f0()) / d));
}

void EmulationSetup::validate() const {
  cfg.validate();
  if (rx_small.size() == 0) throw InvalidArgument("small receive array is empty");
  if (rx_large.size() != 2 * rx_small.size() - 1)
    throw InvalidArgument("large receive array must have 2n - 1 elements");
  if (patch_len < 2) throw InvalidArgument("patch length must be at least 2");
  if (tx_small.size() == 0 || tx_large.size() == 0) throw InvalidArgument("transmit array is empty");
  if (technique == Technique::STA && tx_small.element_x != tx_large.element_x)
    throw InvalidArgument("STA emulation needs identical transmit elements on both sides");
  // Every small receive position must coincide with a large one.
  for (double x : rx_small.element_x) {
    const bool found = std::any_of(rx_large.element_x.begin(), rx_large.element_x.end(),
                                   [&](double y) { return std::abs(x - y) < 1e-12; });
    if (!found) throw InvalidArgument("small receive positions must be a subset of the large array");
  }
  if (pulse.f0() <= 0.0) throw InvalidArgument("emulation setup needs a pulse");
  if (!(focus_jitter >= 0.0)) throw InvalidArgument("focus jitter must be non-negative");
}

namespace {

struct Draw {
  Point2 target;
  double amplitude = 1.0;
  FocalPoint focal;
  std::size_t event = 0;
};

// Target position, polarity, focal offset and (STA) transmit element.
Draw draw_target(std::mt19937_64& rng, const EmulationSetup& s) {
  const double half = 0.5 * s.cfg.sector_angle;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Draw d;
  const double theta = -half + (2.0 * half) * u01(rng);
  const double range = s.cfg.depth_min + (s.cfg.depth_max - s.cfg.depth_min) * u01(rng);
  const Point2 t = polar_point(theta, range);
  d.target = {f32(t.x), f32(t.z)};
  d.amplitude = u01(rng) < 0.5 ? -1.0 : 1.0;
  const double pulse_samples = s.pulse.duration() * s.cfg.fs;
  const double axial_samples =
      std::max(0.0, 0.5 * static_cast<double>(s.patch_len) - 0.5 * pulse_samples);
  const double dtheta = (2.0 * u01(rng) - 1.0) * s.focus_jitter * s.first_null();
  const double drange =
      (2.0 * u01(rng) - 1.0) * s.focus_jitter * axial_samples * s.cfg.c / (2.0 * s.cfg.fs);
  d.focal = {f32(theta + dtheta), f32(range + drange)};
  std::uniform_int_distribution<std::size_t> pick(0, s.tx_small.size() - 1);
  d.event = pick(rng);
  return d;
}

// Focused patch of `phantom` acquired with (tx, rx) for the setup's technique.
FocusedPatch acquire_and_focus(const EmulationSetup& s, const Phantom& phantom,
                               const ArrayGeometry& tx, const ArrayGeometry& rx, FocalPoint fp,
                               std::size_t event) {
  // Jittered focal points and interferers may sit slightly beyond the nominal depth range.
  AcquisitionConfig cfg = s.cfg;
  cfg.depth_max += static_cast<double>(s.patch_len) * s.cfg.c / s.cfg.fs;
  switch (s.technique) {
    case Technique::SA: {
      auto data = simulate_sa(phantom, rx, s.pulse, cfg);
      return focus_channels(ChannelSource::sa(std::move(data), rx, cfg), 0, fp, s.patch_len);
    }
    case Technique::STA: {
      const ArrayGeometry tx1 = single_element(tx.element_x[event]);
      auto data = simulate_sta(phantom, tx1, rx, s.pulse, cfg);
      return focus_channels(ChannelSource::sta(std::move(data), tx1, rx, cfg), 0, fp, s.patch_len);
    }
    case Technique::PA: {
      auto data = simulate_pa(phantom, tx, rx, s.pulse, cfg, {fp.theta});
      return focus_channels(ChannelSource::pa(std::move(data), tx, rx, cfg), 0, fp, s.patch_len);
    }
  }
  throw InvalidArgument("unknown technique");
}

TrainingPair finish_pair(FocusedPatch input, FocusedPatch target, PairKind kind) {
  normalize(input);
  target.scale = input.scale;
  for (float& v : target.values) v = static_cast<float>(static_cast<double>(v) / input.scale);
  TrainingPair p;
  p.input = std::move(input);
  p.target = std::move(target);
  p.kind = kind;
  return p;
}

}  // namespace

TrainingPair gen_emulation_pair(std::mt19937_64& rng, const EmulationSetup& s) {
  const Draw d = draw_target(rng, s);
  const Phantom ph = make_point_phantom({{d.target.x, d.target.z, d.amplitude}});
  auto in = acquire_and_focus(s, ph, s.tx_small, s.rx_small, d.focal, d.event);
  auto tg = acquire_and_focus(s, ph, s.tx_large, s.rx_large, d.focal, d.event);
  TrainingPair p = finish_pair(std::move(in), std::move(tg), PairKind::Emulation);
  p.main_target = d.target;
  p.event = d.event;
  return p;
}

TrainingPair gen_sidelobe_pair(std::mt19937_64& rng, const EmulationSetup& s,
                               double amplitude_scale) {
  const Draw d = draw_target(rng, s);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double lo = s.first_null();
  const double hi = std::max(lo, 0.5 * s.cfg.sector_angle);
  const double offset = lo + (hi - lo) * u01(rng);
  const double side = u01(rng) < 0.5 ? -1.0 : 1.0;
  const double main_theta = std::atan2(d.target.x, d.target.z);
  // Keep the interferer's echo inside the patch window around the focal range.
  const double window = 0.25 * static_cast<double>(s.patch_len) * s.cfg.c / (2.0 * s.cfg.fs);
  const double irange = std::max(s.cfg.c / s.cfg.fs, d.focal.range + (2.0 * u01(rng) - 1.0) * window);
  const double gain_db = (2.0 * u01(rng) - 1.0) * 6.0;
  const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
  const double amp = f32(sign * std::pow(10.0, gain_db / 20.0) * amplitude_scale);
  const Point2 ip0 = polar_point(main_theta + side * offset, irange);
  const Point2 ip{f32(ip0.x), f32(ip0.z)};

  const Phantom main = make_point_phantom({{d.target.x, d.target.z, d.amplitude}});
  const Phantom both =
      make_point_phantom({{d.target.x, d.target.z, d.amplitude}, {ip.x, ip.z, amp}});
  auto in = acquire_and_focus(s, both, s.tx_small, s.rx_small, d.focal, d.event);
  auto tg = acquire_and_focus(s, main, s.tx_large, s.rx_large, d.focal, d.event);
  TrainingPair p = finish_pair(std::move(in), std::move(tg), PairKind::Sidelobe);
  p.main_target = d.target;
  p.interferer = ip;
  p.interferer_amplitude = amp;
  p.event = d.event;
  return p;
}

std::mt19937_64 pair_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

bool is_sidelobe_index(std::size_t index, double mix) {
  const auto a = static_cast<std::size_t>(std::floor(static_cast<double>(index) * mix));
  const auto b = static_cast<std::size_t>(std::floor(static_cast<double>(index + 1) * mix));
  return b > a;
}

std::string DatasetHeader::to_text() const {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << "technique = " << to_string(technique) << '\n'
     << "n_pairs = " << n_pairs << '\n'
     << "sidelobe_mix = " << sidelobe_mix << '\n'
     << "seed = " << seed << '\n'
     << "n_channels_in = " << n_channels_in << '\n'
     << "n_channels_out = " << n_channels_out << '\n'
     << "patch_len = " << patch_len << '\n'
     << "focus_jitter = " << focus_jitter << '\n';
  std::istringstream notes_in(notes);
  for (std::string line; std::getline(notes_in, line);) os << "# " << line << '\n';
  return os.str();
}

DatasetHeader DatasetHeader::from_text(const std::string& text) {
  DatasetHeader h;
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  std::string line;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      h.notes += line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1) + '\n';
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("dataset header line without '='", 0);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    std::istringstream vs(val);
    vs.imbue(std::locale::classic());
    if (key == "technique") h.technique = parse_technique(val);
    else if (key == "n_pairs") vs >> h.n_pairs;
    else if (key == "sidelobe_mix") vs >> h.sidelobe_mix;
    else if (key == "seed") vs >> h.seed;
    else if (key == "n_channels_in") vs >> h.n_channels_in;
    else if (key == "n_channels_out") vs >> h.n_channels_out;
    else if (key == "patch_len") vs >> h.patch_len;
    else if (key == "focus_jitter") vs >> h.focus_jitter;
    else throw FormatError("unknown dataset header key '" + key + "'", 0);
    if (key != "technique" && vs.fail()) throw FormatError("bad value for dataset header key '" + key + "'", 0);
    ++seen;
  }
  if (seen < 8) throw FormatError("dataset header is incomplete", 0);
  return h;
}

PatchDataset Dataset::to_patch_dataset() const {
  PatchDataset d;
  d.in_size = header.n_channels_in * header.patch_len;
  d.out_size = header.n_channels_out * header.patch_len;
  d.inputs.reserve(pairs.size() * d.in_size);
  d.targets.reserve(pairs.size() * d.out_size);
  for (const auto& p : pairs) {
    d.inputs.insert(d.inputs.end(), p.input.values.begin(), p.input.values.end());
    d.targets.insert(d.targets.end(), p.target.values.begin(), p.target.values.end());
  }
  return d;
}

Dataset build_dataset(std::size_t n_pairs, double mix, std::uint64_t seed,
                      const EmulationSetup& setup) {
  if (n_pairs < 1) throw InvalidArgument("dataset needs at least one pair");
  if (!(mix >= 0.0 && mix <= 1.0)) throw InvalidArgument("sidelobe mix must lie in [0, 1]");
  setup.validate();
  Dataset ds;
  ds.header.technique = setup.technique;
  ds.header.n_pairs = n_pairs;
  ds.header.sidelobe_mix = mix;
  ds.header.seed = seed;
  ds.header.n_channels_in = setup.rx_small.size();
  ds.header.n_channels_out = setup.rx_large.size();
  ds.header.patch_len = setup.patch_len;
  ds.header.focus_jitter = setup.focus_jitter;
  ds.pairs.resize(n_pairs);
  parallel_for(n_pairs, [&](std::size_t i) {
    auto rng = pair_rng(seed, i);
    ds.pairs[i] = is_sidelobe_index(i, mix) ? gen_sidelobe_pair(rng, setup)
                                            : gen_emulation_pair(rng, setup);
  });
  return ds;
}

std::filesystem::path dataset_header_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".header.txt");
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const auto& h = ds.header;
  std::vector<Tensor> rec;
  rec.reserve(ds.pairs.size() * 3);
  for (const auto& p : ds.pairs) {
    rec.emplace_back(std::vector<std::uint64_t>{p.input.n_channels, p.input.n_time}, p.input.values);
    rec.emplace_back(std::vector<std::uint64_t>{p.target.n_channels, p.target.n_time}, p.target.values);
    // Doubles are narrowed to float; the meta record is informational.
    rec.emplace_back(std::vector<std::uint64_t>{kMetaSize},
                     std::vector<float>{static_cast<float>(p.kind),
                                        static_cast<float>(p.input.focal_point.theta),
                                        static_cast<float>(p.input.focal_point.range),
                                        static_cast<float>(p.input.scale),
                                        static_cast<float>(p.main_target.x),
                                        static_cast<float>(p.main_target.z),
                                        static_cast<float>(p.interferer.x),
                                        static_cast<float>(p.interferer.z),
                                        static_cast<float>(p.interferer_amplitude),
                                        static_cast<float>(p.event), 0.0f, 0.0f});
  }
  write_records_file(path, rec);
  std::ofstream hf(dataset_header_path(path), std::ios::binary);
  if (!hf) throw IoError("cannot write dataset header " + dataset_header_path(path).string());
  hf << h.to_text();
  if (!hf) throw IoError("failed writing dataset header " + dataset_header_path(path).string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream hf(dataset_header_path(path), std::ios::binary);
  if (!hf) throw IoError("cannot read dataset header " + dataset_header_path(path).string());
  std::ostringstream text;
  text << hf.rdbuf();
  Dataset ds;
  ds.header = DatasetHeader::from_text(text.str());
  const auto rec = read_records_file(path);
  const auto& h = ds.header;
  if (rec.size() != 3 * h.n_pairs) throw FormatError("dataset record count does not match its header", 0);
  ds.pairs.resize(h.n_pairs);
  for (std::size_t i = 0; i < h.n_pairs; ++i) {
    const auto& in = rec[3 * i];
    const auto& tg = rec[3 * i + 1];
    const auto& meta = rec[3 * i + 2];
    if (in.dims != std::vector<std::uint64_t>{h.n_channels_in, h.patch_len} ||
        tg.dims != std::vector<std::uint64_t>{h.n_channels_out, h.patch_len} ||
        meta.data.size() != kMetaSize)
      throw FormatError("dataset pair " + std::to_string(i) + " has unexpected shapes", 0);
    auto& p = ds.pairs[i];
    p.kind = meta.data[0] == 0.0f ? PairKind::Emulation : PairKind::Sidelobe;
    const FocalPoint fp{meta.data[1], meta.data[2]};
    p.input = {h.n_channels_in, h.patch_len, in.data, fp, meta.data[3]};
    p.target = {h.n_channels_out, h.patch_len, tg.data, fp, meta.data[3]};
    p.main_target = {meta.data[4], meta.data[5]};
    p.interferer = {meta.data[6], meta.data[7]};
    p.interferer_amplitude = meta.data[8];
    p.event = static_cast<std::size_t>(meta.data[9]);
  }
  return ds;
}

}  // namespace usbf
