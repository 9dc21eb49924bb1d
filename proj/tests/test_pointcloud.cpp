#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "asyncnav/core.hpp"
#include "asyncnav/pointcloud.hpp"
#include "oracles.hpp"

using namespace asyncnav;

namespace {

PointCloud random_cloud(Rng& rng, const PillarGridSpec& spec, size_t n, bool in_fov = true) {
  PointCloud cloud;
  for (size_t i = 0; i < n; ++i) {
    SphericalPoint p;
    p.r = rng.uniform(0.0, spec.r_max * 1.5);
    if (in_fov) {
      p.theta = rng.uniform(spec.theta_min, spec.theta_max);
      p.phi = rng.uniform(spec.phi_min, spec.phi_max);
    } else {
      p.theta = rng.uniform(-kPi, kPi);
      p.phi = rng.uniform(0.0, kPi);
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

PillarGridSpec random_spec(Rng& rng) {
  PillarGridSpec spec;
  spec.theta_min = rng.uniform(-kPi, 0.0);
  spec.theta_max = spec.theta_min + rng.uniform(0.3, kPi);
  spec.phi_min = rng.uniform(0.1, kPi / 2.0);
  spec.phi_max = spec.phi_min + rng.uniform(0.3, kPi / 2.0);
  spec.d_theta = (spec.theta_max - spec.theta_min) / (2.0 + rng.uniform(0.0, 38.0));
  spec.d_phi = (spec.phi_max - spec.phi_min) / (2.0 + rng.uniform(0.0, 18.0));
  spec.r_max = rng.uniform(5.0, 30.0);
  return spec;
}

}  // namespace

TEST_CASE("cartesian_to_spherical axis cases") {
  auto p1 = cartesian_to_spherical({1.0, 0.0, 0.0});
  CHECK(p1.r == Catch::Approx(1.0));
  CHECK(p1.theta == Catch::Approx(0.0));
  CHECK(p1.phi == Catch::Approx(kPi / 2.0));

  auto p2 = cartesian_to_spherical({0.0, 1.0, 0.0});
  CHECK(p2.r == Catch::Approx(1.0));
  CHECK(p2.theta == Catch::Approx(kPi / 2.0));
  CHECK(p2.phi == Catch::Approx(kPi / 2.0));
}

TEST_CASE("cartesian_to_spherical matches direct formula evaluation") {
  const Vec3 v{0.3, -0.4, 1.2};
  const auto p = cartesian_to_spherical(v);
  const double r = std::sqrt(0.3 * 0.3 + 0.4 * 0.4 + 1.2 * 1.2);
  CHECK(p.r == Catch::Approx(r).epsilon(1e-15));
  CHECK(p.theta == Catch::Approx(std::atan2(-0.4, 0.3)).epsilon(1e-15));
  CHECK(p.phi == Catch::Approx(std::acos(1.2 / r)).epsilon(1e-15));
}

TEST_CASE("cartesian_to_spherical origin and error cases") {
  const auto p = cartesian_to_spherical({0.0, 0.0, 0.0});
  CHECK(p.r == 0.0);
  CHECK(p.theta == 0.0);
  CHECK(p.phi == 0.0);
  CHECK_THROWS_AS(cartesian_to_spherical({std::nan(""), 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(
      cartesian_to_spherical({std::numeric_limits<double>::infinity(), 0.0, 0.0}),
      std::invalid_argument);
}

TEST_CASE("spherical round trip recovers cartesian input") {
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    Vec3 v{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
    if (v.norm() < 1e-6) continue;
    const Vec3 back = spherical_to_cartesian(cartesian_to_spherical(v));
    CHECK((back - v).norm() <= 1e-9 * v.norm());
  }
}

TEST_CASE("bin_index boundaries") {
  PillarGridSpec spec;
  SphericalPoint lower{1.0, spec.theta_min, spec.phi_min};
  auto idx = bin_index(spec, lower);
  REQUIRE(idx.has_value());
  CHECK(idx->first == 0);
  CHECK(idx->second == 0);

  SphericalPoint upper{1.0, spec.theta_max, spec.phi_min};
  CHECK_FALSE(bin_index(spec, upper).has_value());

  // theta range [-pi/2, pi/2), resolution pi/60: theta = 0 lands in bin 30
  SphericalPoint mid{1.0, 0.0, spec.phi_min};
  auto idx_mid = bin_index(spec, mid);
  REQUIRE(idx_mid.has_value());
  CHECK(idx_mid->first == 30);
}

TEST_CASE("grid_dims per the floor formulas") {
  PillarGridSpec spec;  // defaults: azimuth [-pi/2, pi/2) at pi/60
  auto [np, nt] = grid_dims(spec);
  CHECK(nt == 60);
  CHECK(np == 18);

  PillarGridSpec polar = spec;
  polar.d_phi = kPi / 36.0;  // span pi/2 -> floor((pi/2)/(pi/36)) = 18
  CHECK(grid_dims(polar).first == 18);

  PillarGridSpec single = spec;
  single.theta_min = 0.0;
  single.theta_max = 0.25;
  single.d_theta = 0.25;
  CHECK(grid_dims(single).second == 1);
}

TEST_CASE("project: empty cloud and single point") {
  PillarGridSpec spec;
  const PseudoImage empty = project(spec, {});
  for (double v : empty.values) CHECK(v == spec.r_max);

  PointCloud one;
  const double theta = spec.theta_min + 5.5 * spec.d_theta;
  const double phi = spec.phi_min + 3.5 * spec.d_phi;
  one.points.push_back({2.0, theta, phi});
  const PseudoImage img = project(spec, one);
  for (int j = 0; j < img.rows(); ++j)
    for (int i = 0; i < img.cols(); ++i) {
      if (j == 3 && i == 5)
        CHECK(img.at(j, i) == 2.0);
      else
        CHECK(img.at(j, i) == spec.r_max);
    }
}

TEST_CASE("project equals brute-force oracle on random clouds") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const PillarGridSpec spec = random_spec(rng);
    const PointCloud cloud = random_cloud(rng, spec, 1000, trial % 2 == 0);
    const PseudoImage fast = project(spec, cloud);
    const PseudoImage slow = oracles::project_bruteforce(spec, cloud);
    REQUIRE(fast.values.size() == slow.values.size());
    for (size_t i = 0; i < fast.values.size(); ++i) CHECK(fast.values[i] == slow.values[i]);
  }
}

TEST_CASE("project properties: clamping, permutation invariance, monotonicity") {
  Rng rng(11);
  const PillarGridSpec spec = random_spec(rng);
  PointCloud cloud = random_cloud(rng, spec, 500);
  const PseudoImage img = project(spec, cloud);
  for (double v : img.values) {
    CHECK(v >= 0.0);
    CHECK(v <= spec.r_max);
  }

  PointCloud shuffled = cloud;
  for (size_t i = shuffled.points.size(); i > 1; --i)
    std::swap(shuffled.points[i - 1], shuffled.points[rng.uniform_index(i)]);
  const PseudoImage img2 = project(spec, shuffled);
  CHECK(img.values == img2.values);

  PointCloud extended = cloud;
  extended.points.push_back(
      {rng.uniform(0.0, spec.r_max), rng.uniform(spec.theta_min, spec.theta_max),
       rng.uniform(spec.phi_min, spec.phi_max)});
  const PseudoImage img3 = project(spec, extended);
  for (size_t i = 0; i < img.values.size(); ++i) CHECK(img3.values[i] <= img.values[i]);
}

TEST_CASE("over-range points clamp to r_max, out-of-FOV points drop") {
  PillarGridSpec spec;
  PointCloud cloud;
  cloud.points.push_back({spec.r_max * 2.0, spec.theta_min + 0.5 * spec.d_theta,
                          spec.phi_min + 0.5 * spec.d_phi});
  cloud.points.push_back({1.0, spec.theta_max + 0.2, spec.phi_min + 0.5 * spec.d_phi});
  const PseudoImage img = project(spec, cloud);
  CHECK(img.at(0, 0) == spec.r_max);
  double min_cell = *std::min_element(img.values.begin(), img.values.end());
  CHECK(min_cell == spec.r_max);  // the out-of-FOV 1.0 m return must not appear
}

TEST_CASE("pseudo-image file format") {
  PillarGridSpec spec;
  spec.theta_min = 0.0;
  spec.theta_max = 0.2;
  spec.d_theta = 0.1;
  spec.phi_min = 1.0;
  spec.phi_max = 1.2;
  spec.d_phi = 0.1;
  spec.r_max = 5.0;
  PointCloud cloud;
  cloud.points.push_back({2.5, 0.05, 1.05});
  const PseudoImage img = project(spec, cloud);
  std::ostringstream out;
  write_pseudo_image(out, img);
  CHECK(out.str() == "2 2 5\n2.5 5\n5 5\n");
}

TEST_CASE("read_cloud parses x y z lines") {
  std::istringstream in("1 0 0\n0 1 0\n");
  const PointCloud cloud = read_cloud(in);
  REQUIRE(cloud.size() == 2);
  CHECK(cloud.points[0].r == Catch::Approx(1.0));
  CHECK(cloud.points[1].theta == Catch::Approx(kPi / 2.0));
}

TEST_CASE("invalid grid specs are rejected") {
  PillarGridSpec bad;
  bad.d_theta = -1.0;
  CHECK_THROWS_AS(grid_dims(bad), std::invalid_argument);
  PillarGridSpec inverted;
  inverted.theta_min = 1.0;
  inverted.theta_max = 0.0;
  CHECK_THROWS_AS(project(inverted, {}), std::invalid_argument);
}
