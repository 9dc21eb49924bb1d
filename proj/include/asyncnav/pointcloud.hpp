#pragma once

// Spherical pillar binning: converts unstructured point clouds into
// single-channel range pseudo-images. Each pillar holds the minimum range
// among the points falling in its angular bin; empty pillars read as the
// sensor's maximum range.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyncnav/core.hpp"

namespace asyncnav {

// (r, theta, phi): radial distance, azimuth in [-pi, pi), polar angle from
// +Z in [0, pi].
struct SphericalPoint {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

struct PointCloud {
  std::vector<SphericalPoint> points;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct PillarGridSpec {
  double theta_min = -kPi / 2.0;
  double theta_max = kPi / 2.0;
  double phi_min = kPi / 2.0 - kPi / 4.0;
  double phi_max = kPi / 2.0 + kPi / 4.0;
  double d_theta = kPi / 60.0;
  double d_phi = kPi / 36.0;
  double r_max = 10.0;

  bool valid() const {
    return theta_min < theta_max && phi_min < phi_max && d_theta > 0.0 &&
           d_phi > 0.0 && r_max > 0.0 && n_theta() >= 1 && n_phi() >= 1;
  }

  int n_theta() const { return static_cast<int>(std::floor((theta_max - theta_min) / d_theta)); }
  int n_phi() const { return static_cast<int>(std::floor((phi_max - phi_min) / d_phi)); }

  // Pillar center direction in the body frame (unit vector).
  Vec3 ray_direction(int i, int j) const {
    const double theta = theta_min + (i + 0.5) * d_theta;
    const double phi = phi_min + (j + 0.5) * d_phi;
    const double sp = std::sin(phi);
    return {sp * std::cos(theta), sp * std::sin(theta), std::cos(phi)};
  }
};

inline void require_valid(const PillarGridSpec& spec) {
  if (!spec.valid()) throw std::invalid_argument("pointcloud: invalid pillar grid spec");
}

// Row-major (N_phi x N_theta) grid of ranges; row index j is polar, column
// index i is azimuth. Every cell lies in [0, r_max].
struct PseudoImage {
  std::vector<double> values;
  PillarGridSpec spec;

  PseudoImage() = default;
  explicit PseudoImage(const PillarGridSpec& s)
      : values(static_cast<size_t>(s.n_phi()) * s.n_theta(), s.r_max), spec(s) {}

  int rows() const { return spec.n_phi(); }
  int cols() const { return spec.n_theta(); }
  double& at(int j, int i) { return values[static_cast<size_t>(j) * cols() + i]; }
  double at(int j, int i) const { return values[static_cast<size_t>(j) * cols() + i]; }
};

inline SphericalPoint cartesian_to_spherical(const Vec3& p) {
  if (!p.finite()) throw std::invalid_argument("cartesian_to_spherical: non-finite input");
  const double r = p.norm();
  if (r == 0.0) return {0.0, 0.0, 0.0};
  double theta = std::atan2(p.y, p.x);
  if (theta >= kPi) theta -= 2.0 * kPi;  // atan2 may return +pi exactly
  const double phi = std::acos(std::clamp(p.z / r, -1.0, 1.0));
  return {r, theta, phi};
}

inline Vec3 spherical_to_cartesian(const SphericalPoint& p) {
  const double sp = std::sin(p.phi);
  return {p.r * sp * std::cos(p.theta), p.r * sp * std::sin(p.theta), p.r * std::cos(p.phi)};
}

// (azimuth index i, polar index j), or nullopt for out-of-FOV points.
// Lower bin edges are inclusive, upper exclusive.
inline std::optional<std::pair<int, int>> bin_index(const PillarGridSpec& spec,
                                                    const SphericalPoint& pt) {
  require_valid(spec);
  if (pt.theta < spec.theta_min || pt.theta >= spec.theta_max) return std::nullopt;
  if (pt.phi < spec.phi_min || pt.phi >= spec.phi_max) return std::nullopt;
  const int i = static_cast<int>(std::floor((pt.theta - spec.theta_min) / spec.d_theta));
  const int j = static_cast<int>(std::floor((pt.phi - spec.phi_min) / spec.d_phi));
  if (i < 0 || i >= spec.n_theta() || j < 0 || j >= spec.n_phi()) return std::nullopt;
  return std::make_pair(i, j);
}

// Single pass over the cloud; deterministic for any point ordering. Ranges
// beyond r_max are clamped rather than dropped.
inline PseudoImage project(const PillarGridSpec& spec, const PointCloud& cloud) {
  require_valid(spec);
  PseudoImage img(spec);
  for (const auto& pt : cloud.points) {
    const auto idx = bin_index(spec, pt);
    if (!idx) continue;
    double& cell = img.at(idx->second, idx->first);
    cell = std::min(cell, std::min(pt.r, spec.r_max));
  }
  return img;
}

inline std::pair<int, int> grid_dims(const PillarGridSpec& spec) {
  require_valid(spec);
  return {spec.n_phi(), spec.n_theta()};
}

// --- file formats ---
// Cloud: one "x y z" record per line (meters, body frame).
// Pseudo-image: header "N_phi N_theta r_max", then N_phi rows of N_theta
// space-separated ranges.

inline PointCloud read_cloud(std::istream& in) {
  PointCloud cloud;
  double x, y, z;
  while (in >> x >> y >> z) cloud.points.push_back(cartesian_to_spherical({x, y, z}));
  return cloud;
}

inline void write_pseudo_image(std::ostream& out, const PseudoImage& img) {
  out << img.rows() << ' ' << img.cols() << ' ' << strformat("%.9g", img.spec.r_max) << '\n';
  for (int j = 0; j < img.rows(); ++j) {
    for (int i = 0; i < img.cols(); ++i) {
      if (i > 0) out << ' ';
      out << strformat("%.9g", img.at(j, i));
    }
    out << '\n';
  }
}

}  // namespace asyncnav
