#pragma once

// Temporal Encoding Module: maps a perception age to the four-component
// sinusoidal feature consumed by the policy. The age is quantized to a
// fixed resolution first, so equal quantized ages encode identically.

#include <array>
#include <cmath>
#include <stdexcept>

namespace asyncnav {

inline constexpr double kTemResolution = 0.01;  // seconds
inline constexpr int kTemDim = 4;

struct TemporalEncoding {
  std::array<double, kTemDim> phi{};
  double resolution = kTemResolution;
};

// phi = [sin t_j, cos t_j, sin(t_j/100), cos(t_j/100)] with
// j = round(delta_t / resolution) (half away from zero), t_j = j * resolution.
inline TemporalEncoding encode(double delta_t, double resolution = kTemResolution) {
  if (!(delta_t >= 0.0)) throw std::invalid_argument("temporal::encode: negative delta_t");
  if (!(resolution > 0.0)) throw std::invalid_argument("temporal::encode: resolution must be > 0");
  const double j = std::round(delta_t / resolution);
  const double t_j = j * resolution;
  TemporalEncoding enc;
  enc.resolution = resolution;
  enc.phi = {std::sin(t_j), std::cos(t_j), std::sin(t_j / 100.0), std::cos(t_j / 100.0)};
  return enc;
}

}  // namespace asyncnav
