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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace usbf {

struct Point2 {
  double x = 0.0;  // lateral [m]
  double z = 0.0;  // depth [m]
};

/// Scanning technique: monostatic synthetic aperture, synthetic transmit aperture, phased array.
enum class Technique { SA, STA, PA };

std::string_view to_string(Technique t);
Technique parse_technique(std::string_view s);

/// Element positions of a linear array on the x axis (z = 0).
struct ArrayGeometry {
  std::vector<double> element_x;  // [m], increasing
  double pitch = 0.0;             // [m]

  std::size_t size() const { return element_x.size(); }
  /// Physical aperture n * pitch [m].
  double aperture() const { return static_cast<double>(size()) * pitch; }
  /// Largest |x| over the elements [m].
  double half_extent() const;
  Point2 element(std::size_t i) const { return {element_x[i], 0.0}; }
};

/// Centered uniform linear array with pitch = element_width + kerf.
ArrayGeometry make_linear_array(std::size_t n, double element_width, double kerf);

/// Centered uniform array with an explicit pitch.
ArrayGeometry make_linear_array_pitch(std::size_t n, double pitch);

enum class Window { Rectangular, Hann };

Window parse_window(std::string_view s);
std::string_view to_string(Window w);

/// Tone burst s(t) = w(t) sin(2 pi f0 t) on [0, n_cycles / f0].
class PulseWaveform {
 public:
  PulseWaveform() = default;
  PulseWaveform(double f0, double n_cycles, double fs, Window window);

  double f0() const { return f0_; }
  double n_cycles() const { return n_cycles_; }
  double fs() const { return fs_; }
  Window window() const { return window_; }
  double duration() const { return n_cycles_ / f0_; }
  const std::vector<double>& samples() const { return samples_; }

  /// Closed-form value at an arbitrary time offset; zero outside the burst.
  double operator()(double t) const;

 private:
  double f0_ = 0.0;
  double n_cycles_ = 0.0;
  double fs_ = 0.0;
  Window window_ = Window::Hann;
  std::vector<double> samples_;
};

PulseWaveform make_pulse(double f0, double n_cycles, double fs, Window window);

struct AcquisitionConfig {
  double c = 1540.0;                                  // [m/s]
  double fs = 16e6;                                   // [Hz]
  double depth_min = 0.010;                           // [m]
  double depth_max = 0.070;                           // [m]
  double sector_angle = 48.0 * std::numbers::pi / 180.0;  // [rad]
  std::size_t n_scan_lines = 33;
  double tx_focus_depth = 0.050;                      // [m]
  bool geometric_spreading = false;
  /// Time from a path's arrival to the echo's envelope peak [s]. Beamforming and
  /// patch focusing add it to every delay; use pulse_center() for a given burst.
  double echo_delay = 0.0;

  /// Throws InvalidArgument when an invariant is violated.
  void validate() const;
};

/// Envelope peak offset of a tone burst: half its duration.
inline double pulse_center(const PulseWaveform& pulse) { return 0.5 * pulse.duration(); }

/// Scan-line steering angles spanning the sector symmetrically about broadside.
std::vector<double> line_angles(const AcquisitionConfig& cfg);

/// Number of RF samples recorded per channel: enough for any scatterer within
/// depth_max of the array center, including the largest transmit focusing delay.
std::size_t record_samples(const AcquisitionConfig& cfg, const PulseWaveform& pulse,
                           double array_half_extent);

struct Scatterer {
  double x = 0.0;
  double z = 0.0;
  double amplitude = 1.0;
};

struct Phantom {
  std::vector<Scatterer> scatterers;

  std::size_t size() const { return scatterers.size(); }
  bool empty() const { return scatterers.empty(); }
};

/// alpha * a followed by b, as one scatterer list.
Phantom combine(const Phantom& a, double alpha, const Phantom& b);

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;

  double area() const { return (x_max - x_min) * (z_max - z_min); }
  bool contains(Point2 p) const {
    return p.x >= x_min && p.x <= x_max && p.z >= z_min && p.z <= z_max;
  }
};

/// Speckle field with standard-normal amplitudes; draws inside the cyst disc are
/// discarded. The cyst centre must lie in the region; the disc may overhang it.
Phantom make_cyst_phantom(const Rect& region, Point2 cyst_center, double cyst_radius,
                          std::size_t n_scatterers, std::uint64_t seed);

Phantom make_point_phantom(std::vector<Scatterer> points);

inline double wavelength(const AcquisitionConfig& cfg, double f0) { return cfg.c / f0; }

inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Position at steering angle theta and range r from the array center.
inline Point2 polar_point(double theta, double range) {
  return {range * std::sin(theta), range * std::cos(theta)};
}

}  // namespace usbf
