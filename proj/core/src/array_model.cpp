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

#include "usbf/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "usbf/errors.hpp"

namespace usbf {

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::SA: return "sa";
    case Technique::STA: return "sta";
    case Technique::PA: return "pa";
  }
  return "?";
}

Technique parse_technique(std::string_view s) {
  if (s == "sa") return Technique::SA;
  if (s == "sta") return Technique::STA;
  if (s == "pa") return Technique::PA;
  throw InvalidArgument("unknown technique '" + std::string(s) + "' (expected sa, sta or pa)");
}

Window parse_window(std::string_view s) {
  if (s == "hann") return Window::Hann;
  if (s == "rect" || s == "rectangular") return Window::Rectangular;
  throw InvalidArgument("unknown window '" + std::string(s) + "' (expected hann or rect)");
}

std::string_view to_string(Window w) { return w == Window::Hann ? "hann" : "rect"; }

double ArrayGeometry::half_extent() const {
  double m = 0.0;
  for (double x : element_x) m = std::max(m, std::abs(x));
  return m;
}

ArrayGeometry make_linear_array_pitch(std::size_t n, double pitch) {
  if (n == 0) throw InvalidArgument("array needs at least one element");
  if (!(pitch >= 0.0)) throw InvalidArgument("pitch must be non-negative");
  ArrayGeometry a;
  a.pitch = pitch;
  a.element_x.resize(n);
  // (i - (n-1)/2) * pitch is exactly antisymmetric, so the array sums to zero.
  const double mid = 0.5 * static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) a.element_x[i] = (static_cast<double>(i) - mid) * pitch;
  return a;
}

ArrayGeometry make_linear_array(std::size_t n, double element_width, double kerf) {
  if (!(element_width >= 0.0) || !(kerf >= 0.0))
    throw InvalidArgument("element width and kerf must be non-negative");
  return make_linear_array_pitch(n, element_width + kerf);
}

PulseWaveform::PulseWaveform(double f0, double n_cycles, double fs, Window window)
    : f0_(f0), n_cycles_(n_cycles), fs_(fs), window_(window) {
  if (!(f0 > 0.0) || !(fs > 0.0)) throw InvalidArgument("pulse frequencies must be positive");
  if (!(n_cycles > 0.0)) throw InvalidArgument("pulse cycle count must be positive");
  const auto n = static_cast<std::size_t>(std::lround(fs * n_cycles / f0));
  samples_.resize(n);
  for (std::size_t k = 0; k < n; ++k) samples_[k] = (*this)(static_cast<double>(k) / fs);
}

double PulseWaveform::operator()(double t) const {
  const double dur = duration();
  if (t < 0.0 || t > dur) return 0.0;
  const double carrier = std::sin(2.0 * std::numbers::pi * f0_ * t);
  if (window_ == Window::Rectangular) return carrier;
  return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / dur)) * carrier;
}

PulseWaveform make_pulse(double f0, double n_cycles, double fs, Window window) {
  return PulseWaveform(f0, n_cycles, fs, window);
}

void AcquisitionConfig::validate() const {
  if (!(c > 0.0)) throw InvalidArgument("speed of sound must be positive");
  if (!(fs > 0.0)) throw InvalidArgument("sampling frequency must be positive");
  if (!(depth_min < depth_max)) throw InvalidArgument("depth_min must be below depth_max");
  if (depth_min < 0.0) throw InvalidArgument("depth_min must be non-negative");
  if (n_scan_lines < 1) throw InvalidArgument("need at least one scan line");
  if (!(sector_angle >= 0.0) || sector_angle >= std::numbers::pi)
    throw InvalidArgument("sector angle must lie in [0, pi)");
  if (!(tx_focus_depth > 0.0)) throw InvalidArgument("transmit focus depth must be positive");
  if (!(echo_delay >= 0.0) || !std::isfinite(echo_delay))
    throw InvalidArgument("echo delay must be finite and non-negative");
}

std::vector<double> line_angles(const AcquisitionConfig& cfg) {
  std::vector<double> a(cfg.n_scan_lines, 0.0);
  if (cfg.n_scan_lines == 1) return a;
  const double step = cfg.sector_angle / static_cast<double>(cfg.n_scan_lines - 1);
  const double mid = 0.5 * static_cast<double>(cfg.n_scan_lines - 1);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (static_cast<double>(i) - mid) * step;
  return a;
}

std::size_t record_samples(const AcquisitionConfig& cfg, const PulseWaveform& pulse,
                           double array_half_extent) {
  const double path = 2.0 * (cfg.depth_max + array_half_extent);
  const double tx_delay = 2.0 * array_half_extent;
  const double t_end = (path + tx_delay) / cfg.c + pulse.duration();
  return static_cast<std::size_t>(std::ceil(t_end * cfg.fs)) + 1;
}

Phantom combine(const Phantom& a, double alpha, const Phantom& b) {
  Phantom out;
  out.scatterers.reserve(a.size() + b.size());
  for (auto s : a.scatterers) {
    s.amplitude *= alpha;
    out.scatterers.push_back(s);
  }
  out.scatterers.insert(out.scatterers.end(), b.scatterers.begin(), b.scatterers.end());
  return out;
}

Phantom make_cyst_phantom(const Rect& region, Point2 cyst_center, double cyst_radius,
                          std::size_t n_scatterers, std::uint64_t seed) {
  if (!(region.x_min < region.x_max) || !(region.z_min < region.z_max))
    throw InvalidArgument("phantom region is empty");
  if (!(region.z_min > 0.0)) throw InvalidArgument("phantom region must lie below the array");
  if (!(cyst_radius >= 0.0)) throw InvalidArgument("cyst radius must be non-negative");
  if (!region.contains(cyst_center)) throw InvalidArgument("cyst centre must lie inside the phantom region");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(region.x_min, region.x_max);
  std::uniform_real_distribution<double> uz(region.z_min, region.z_max);
  std::normal_distribution<double> amp(0.0, 1.0);

  Phantom p;
  p.scatterers.reserve(n_scatterers);
  const double r2 = cyst_radius * cyst_radius;
  for (std::size_t i = 0; i < n_scatterers; ++i) {
    const double x = ux(rng);
    const double z = uz(rng);
    const double a = amp(rng);
    const double dx = x - cyst_center.x;
    const double dz = z - cyst_center.z;
    if (dx * dx + dz * dz < r2) continue;
    p.scatterers.push_back({x, z, a});
  }
  return p;
}

Phantom make_point_phantom(std::vector<Scatterer> points) {
  for (const auto& s : points) {
    if (!(s.z > 0.0)) throw InvalidArgument("point target depth must be positive");
    if (!std::isfinite(s.x) || !std::isfinite(s.amplitude))
      throw InvalidArgument("point target must be finite");
  }
  return Phantom{std::move(points)};
}

}  // namespace usbf
