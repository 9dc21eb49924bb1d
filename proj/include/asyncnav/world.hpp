#pragma once

// Procedural obstacle-forest environment: axis-aligned prism obstacles on
// a flat arena, first-order velocity-tracking vehicle dynamics with
// synthesized attitude, raycast LiDAR against obstacle footprints and the
// arena side walls, and collision/goal/bounds/timeout checks.

#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/episode_status.hpp"
#include "asyncnav/pointcloud.hpp"

namespace asyncnav {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct BoundsBox {
  double x0 = -2.0, x1 = 24.0;
  double y0 = -5.5, y1 = 5.5;
  double z0 = 0.0, z1 = 3.5;

  bool contains(const Vec3& p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1 && p.z >= z0 && p.z <= z1;
  }
};

// Rectangular prism footprint; spans the full vertical extent of the
// operational box.
struct Obstacle {
  double cx = 0.0, cy = 0.0;
  double hx = 0.0, hy = 0.0;  // half extents, > 0

  // Euclidean distance from a 2D point to the footprint (0 inside).
  double footprint_distance(double px, double py) const {
    const double dx = std::max(std::abs(px - cx) - hx, 0.0);
    const double dy = std::max(std::abs(py - cy) - hy, 0.0);
    return std::sqrt(dx * dx + dy * dy);
  }
};

struct ForestWorld {
  std::vector<Obstacle> obstacles;
  Rect area;
  BoundsBox bounds;
  Vec3 start;
  Vec3 goal;
  double density = 0.0;
  uint64_t rng_seed = 0;
};

struct VehicleState {
  Vec3 p;
  Quat q;
  Vec3 v;
  Vec3 omega;
  double t = 0.0;
};

struct ActionCommand {
  Vec3 v_cmd;  // target linear velocity, body frame (m/s)
};

struct LidarModel {
  PillarGridSpec spec;
  double noise_std = 0.0;  // range noise (m), >= 0
};

struct DynamicsParams {
  double tau = 0.2;       // velocity tracking time constant (s)
  double tau_yaw = 0.2;   // yaw alignment lag (s)
  double tilt_max = 0.8;  // attitude synthesis clamp (rad)
  double gravity = 9.81;
};

struct EpisodeLimits {
  double goal_tolerance = 0.5;
  double vehicle_radius = 0.2;
  double time_limit = 30.0;
};

struct WorldConfig {
  Rect area{3.0, -4.0, 19.0, 4.0};  // obstacle placement region
  BoundsBox bounds;
  Vec3 start{0.0, 0.0, 1.2};
  Vec3 goal{20.0, 0.0, 1.2};
  double density = 0.2;     // obstacles per m^2
  double side_min = 0.4;    // prism side (m)
  double side_max = 0.6;
  double clear_radius = 1.5;  // start/goal keep-out disc
};

// Obstacle count = round(density * area); centers uniform over the area,
// sides uniform over [side_min, side_max]; any obstacle overlapping the
// start/goal keep-out discs is resampled. Deterministic given seed.
inline ForestWorld generate_forest(const WorldConfig& cfg, uint64_t seed) {
  if (cfg.density < 0.0) throw std::invalid_argument("generate_forest: density must be >= 0");
  if (!(cfg.side_min > 0.0) || cfg.side_max < cfg.side_min)
    throw std::invalid_argument("generate_forest: invalid side range");

  ForestWorld world;
  world.area = cfg.area;
  world.bounds = cfg.bounds;
  world.start = cfg.start;
  world.goal = cfg.goal;
  world.density = cfg.density;
  world.rng_seed = seed;

  const int count = static_cast<int>(std::llround(cfg.density * cfg.area.area()));
  Rng rng(derive_seed(seed, 0x464f5245u));  // forest stream
  world.obstacles.reserve(count);
  for (int n = 0; n < count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Obstacle ob;
      ob.cx = rng.uniform(cfg.area.x0, cfg.area.x1);
      ob.cy = rng.uniform(cfg.area.y0, cfg.area.y1);
      ob.hx = 0.5 * rng.uniform(cfg.side_min, cfg.side_max);
      ob.hy = 0.5 * rng.uniform(cfg.side_min, cfg.side_max);
      if (ob.footprint_distance(cfg.start.x, cfg.start.y) < cfg.clear_radius) continue;
      if (ob.footprint_distance(cfg.goal.x, cfg.goal.y) < cfg.clear_radius) continue;
      world.obstacles.push_back(ob);
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error("generate_forest: area too small for start/goal clearance");
  }
  return world;
}

namespace detail {

// Slab test against [x0,x1]x[y0,y1]x[z0,z1]; returns the entry distance
// (0 if the origin is inside), or nullopt.
inline std::optional<double> ray_aabb(const Vec3& o, const Vec3& d, double x0, double x1,
                                      double y0, double y1, double z0, double z1) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  const double lo[3] = {x0, y0, z0};
  const double hi[3] = {x1, y1, z1};
  const double oo[3] = {o.x, o.y, o.z};
  const double dd[3] = {d.x, d.y, d.z};
  for (int a = 0; a < 3; ++a) {
    if (dd[a] == 0.0) {
      if (oo[a] < lo[a] || oo[a] > hi[a]) return std::nullopt;
      continue;
    }
    const double inv = 1.0 / dd[a];
    double t0 = (lo[a] - oo[a]) * inv;
    double t1 = (hi[a] - oo[a]) * inv;
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return std::nullopt;
  }
  return tmin;
}

// Distance along the ray to the arena side walls, or nullopt when the ray
// leaves through the open floor/ceiling first.
inline std::optional<double> ray_side_walls(const Vec3& o, const Vec3& d, const BoundsBox& b) {
  double t_side = std::numeric_limits<double>::infinity();
  if (d.x > 0.0) t_side = std::min(t_side, (b.x1 - o.x) / d.x);
  if (d.x < 0.0) t_side = std::min(t_side, (b.x0 - o.x) / d.x);
  if (d.y > 0.0) t_side = std::min(t_side, (b.y1 - o.y) / d.y);
  if (d.y < 0.0) t_side = std::min(t_side, (b.y0 - o.y) / d.y);
  if (!std::isfinite(t_side)) return std::nullopt;
  double t_vert = std::numeric_limits<double>::infinity();
  if (d.z > 0.0) t_vert = (b.z1 - o.z) / d.z;
  if (d.z < 0.0) t_vert = (b.z0 - o.z) / d.z;
  if (t_vert < t_side) return std::nullopt;
  return std::max(t_side, 0.0);
}

}  // namespace detail

// Free distance from `origin` along `dir_world` (unit) to the nearest
// obstacle or side wall; +inf when nothing is hit.
inline double trace_ray(const ForestWorld& world, const Vec3& origin, const Vec3& dir_world) {
  double best = std::numeric_limits<double>::infinity();
  if (const auto t = detail::ray_side_walls(origin, dir_world, world.bounds)) best = *t;
  for (const auto& ob : world.obstacles) {
    // cheap reject: the footprint cannot be closer than this
    if (ob.footprint_distance(origin.x, origin.y) >= best) continue;
    const auto t = detail::ray_aabb(origin, dir_world, ob.cx - ob.hx, ob.cx + ob.hx,
                                    ob.cy - ob.hy, ob.cy + ob.hy, world.bounds.z0,
                                    world.bounds.z1);
    if (t && *t < best) best = *t;
  }
  return best;
}

// True (pre-noise) range per pillar-center beam, capped at r_max; misses
// read as r_max. Used by the static-safety reward.
inline std::vector<double> beam_ranges(const ForestWorld& world, const VehicleState& state,
                                       const PillarGridSpec& spec) {
  const int nt = spec.n_theta(), np = spec.n_phi();
  std::vector<double> ranges(static_cast<size_t>(nt) * np, spec.r_max);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < nt; ++i) {
      const Vec3 dir = state.q.rotate(spec.ray_direction(i, j));
      const double d = trace_ray(world, state.p, dir);
      if (d < spec.r_max) ranges[static_cast<size_t>(j) * nt + i] = d;
    }
  return ranges;
}

// One ray per pillar center, rotated into the world frame; hits get
// Gaussian range noise (clamped >= 0) and are returned in the body frame.
// Misses and returns beyond r_max are omitted, so those pillars project to
// r_max.
inline PointCloud raycast_lidar(const ForestWorld& world, const VehicleState& state,
                                const LidarModel& model, Rng& rng) {
  PointCloud cloud;
  const int nt = model.spec.n_theta(), np = model.spec.n_phi();
  cloud.points.reserve(static_cast<size_t>(nt) * np);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < nt; ++i) {
      const Vec3 dir_body = model.spec.ray_direction(i, j);
      const double d = trace_ray(world, state.p, state.q.rotate(dir_body));
      if (!(d <= model.spec.r_max)) continue;
      double r = d;
      if (model.noise_std > 0.0) r = std::max(0.0, r + rng.normal(0.0, model.noise_std));
      const double theta = std::atan2(dir_body.y, dir_body.x);
      const double phi = std::acos(std::clamp(dir_body.z, -1.0, 1.0));
      cloud.points.push_back({r, theta, phi});
    }
  return cloud;
}

// First-order velocity tracking toward the body-frame command, position
// integration with the updated velocity, yaw aligned to the horizontal
// velocity with a first-order lag, and pitch/roll synthesized from the
// commanded acceleration via a clamped small-angle tilt model.
inline VehicleState step_dynamics(const VehicleState& state, const ActionCommand& cmd, double dt,
                                  const DynamicsParams& params = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_dynamics: dt must be > 0");
  VehicleState next = state;
  const Vec3 target = state.q.rotate(cmd.v_cmd);
  const double alpha = std::min(1.0, dt / params.tau);
  next.v = state.v + (target - state.v) * alpha;
  next.p = state.p + next.v * dt;

  const Vec3 accel = (target - next.v) / params.tau;
  const double yaw_old = state.q.to_zyx()[2];
  const double horiz = std::hypot(next.v.x, next.v.y);
  const double yaw_target = horiz > 0.05 ? std::atan2(next.v.y, next.v.x) : yaw_old;
  const double yaw =
      yaw_old + wrap_angle(yaw_target - yaw_old) * std::min(1.0, dt / params.tau_yaw);
  const double af = std::cos(yaw) * accel.x + std::sin(yaw) * accel.y;
  const double al = -std::sin(yaw) * accel.x + std::cos(yaw) * accel.y;
  const double pitch = std::clamp(af / params.gravity, -params.tilt_max, params.tilt_max);
  const double roll = std::clamp(al / params.gravity, -params.tilt_max, params.tilt_max);
  next.q = Quat::from_zyx(yaw, pitch, roll).normalized();

  Quat dq = next.q * state.q.conjugate();
  const double sign = dq.w < 0.0 ? -1.0 : 1.0;
  next.omega = Vec3{dq.x, dq.y, dq.z} * (2.0 * sign / dt);
  next.t = state.t + dt;
  return next;
}

// Disc-vs-footprint with strict inequality; zero-measure contact does not
// collide. The z band of every obstacle is the full operational height.
inline bool check_collision(const ForestWorld& world, const VehicleState& state,
                            double vehicle_radius) {
  if (state.p.z < world.bounds.z0 || state.p.z > world.bounds.z1) return false;
  for (const auto& ob : world.obstacles)
    if (ob.footprint_distance(state.p.x, state.p.y) < vehicle_radius) return true;
  return false;
}

inline EpisodeStatus episode_status(const ForestWorld& world, const VehicleState& state,
                                    const EpisodeLimits& limits) {
  if (check_collision(world, state, limits.vehicle_radius)) return EpisodeStatus::collided;
  if (!world.bounds.contains(state.p)) return EpisodeStatus::out_of_bounds;
  if ((state.p - world.goal).norm() < limits.goal_tolerance) return EpisodeStatus::reached_goal;
  if (state.t >= limits.time_limit) return EpisodeStatus::timed_out;
  return EpisodeStatus::running;
}

// --- world serialization (replayable) ---

inline void write_world(std::ostream& out, const ForestWorld& w) {
  out << strformat("area %.17g %.17g %.17g %.17g\n", w.area.x0, w.area.y0, w.area.x1, w.area.y1);
  out << "seed " << w.rng_seed << '\n';
  out << strformat("density %.17g\n", w.density);
  out << strformat("bounds %.17g %.17g %.17g %.17g %.17g %.17g\n", w.bounds.x0, w.bounds.x1,
                   w.bounds.y0, w.bounds.y1, w.bounds.z0, w.bounds.z1);
  out << strformat("start %.17g %.17g %.17g\n", w.start.x, w.start.y, w.start.z);
  out << strformat("goal %.17g %.17g %.17g\n", w.goal.x, w.goal.y, w.goal.z);
  for (const auto& ob : w.obstacles)
    out << strformat("obstacle %.17g %.17g %.17g %.17g\n", ob.cx, ob.cy, ob.hx, ob.hy);
}

inline ForestWorld read_world(std::istream& in) {
  ForestWorld w;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "area") ls >> w.area.x0 >> w.area.y0 >> w.area.x1 >> w.area.y1;
    else if (tag == "seed") ls >> w.rng_seed;
    else if (tag == "density") ls >> w.density;
    else if (tag == "bounds")
      ls >> w.bounds.x0 >> w.bounds.x1 >> w.bounds.y0 >> w.bounds.y1 >> w.bounds.z0 >> w.bounds.z1;
    else if (tag == "start") ls >> w.start.x >> w.start.y >> w.start.z;
    else if (tag == "goal") ls >> w.goal.x >> w.goal.y >> w.goal.z;
    else if (tag == "obstacle") {
      Obstacle ob;
      ls >> ob.cx >> ob.cy >> ob.hx >> ob.hy;
      w.obstacles.push_back(ob);
    } else {
      throw std::runtime_error("read_world: unknown record '" + tag + "'");
    }
    if (ls.fail()) throw std::runtime_error("read_world: malformed record '" + line + "'");
  }
  return w;
}

}  // namespace asyncnav
