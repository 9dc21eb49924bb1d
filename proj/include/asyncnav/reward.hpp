#pragma once

// Dense reward components (static safety, velocity tracking, height and
// attitude corridors), their weighted sum, and the sparse terminal reward.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/episode_status.hpp"

namespace asyncnav {

struct SafetyParams {
  double L_s = 1.5;  // activation distance (m)
  double k = 6.0;    // slope
  double c = 0.5;    // offset in (0, 1)
  double q = 0.1;    // quantile level in (0, 1); low = pessimistic
};

struct VelocityParams {
  double k_v1 = 0.6;   // in (0, 1)
  double k_v2 = 1.4;   // > 1
  double sigma = 0.3;  // Gaussian width (m/s)
};

struct CorridorParams {
  double z_min = 0.8;
  double z_max = 2.5;
  double alpha_max = 0.6;  // rad, in (0, pi/2)
};

struct RewardWeights {
  double w_static = 1.0;
  double w_velocity = 0.5;
  double w_height = 0.5;
  double w_attitude = 0.2;
  double r_goal = 20.0;
  double r_collision = -20.0;
  double r_limit = -10.0;
  double gamma = 0.99;
};

struct RewardBreakdown {
  double r_static = 0.0;
  double r_velocity = 0.0;
  double r_height = 0.0;
  double r_attitude = 0.0;
  double r_terminal = 0.0;
  double total = 0.0;
};

// Lower-interpolation quantile: the order statistic at floor(q * (n - 1)).
inline double quantile_lower(std::vector<double> values, double q) {
  const size_t idx = static_cast<size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

// Per beam: p = tanh(k * (min(d, L_s)/L_s - c)) + 1; returns the q-quantile
// of log p over all beams.
inline double static_safety(std::span<const double> beam_ranges, const SafetyParams& p) {
  if (beam_ranges.empty()) throw std::invalid_argument("static_safety: empty beam sequence");
  std::vector<double> log_p(beam_ranges.size());
  for (size_t i = 0; i < beam_ranges.size(); ++i) {
    const double d = std::min(beam_ranges[i], p.L_s);
    log_p[i] = std::log(std::tanh(p.k * (d / p.L_s - p.c)) + 1.0);
  }
  return quantile_lower(std::move(log_p), p.q);
}

// Goal alignment plus band-limited speed tracking: quadratic penalties
// outside [k_v1 v_des, k_v2 v_des], a Gaussian bonus inside.
inline double velocity_reward(const Vec3& v, const Vec3& g_hat, double v_des,
                              const VelocityParams& p) {
  const double speed = v.norm();
  const double align = v.dot(g_hat);
  const double over = std::max(0.0, speed - p.k_v2 * v_des);
  const double under = std::max(0.0, p.k_v1 * v_des - speed);
  double r = align - over * over - under * under;
  if (speed >= p.k_v1 * v_des && speed <= p.k_v2 * v_des) {
    const double d = speed - v_des;
    r += std::exp(-d * d / (2.0 * p.sigma * p.sigma));
  }
  return r;
}

inline double height_penalty(double z, const CorridorParams& p) {
  const double above = std::max(0.0, z - p.z_max);
  const double below = std::max(0.0, p.z_min - z);
  return -above * above - below * below;
}

// Penalizes |pitch| and |roll| (ZYX extraction) beyond alpha_max.
inline double attitude_penalty(const Quat& q, const CorridorParams& p) {
  const auto rpy = q.to_zyx();
  const double ex = std::max(0.0, std::abs(rpy[0]) - p.alpha_max);
  const double ey = std::max(0.0, std::abs(rpy[1]) - p.alpha_max);
  return -ey * ey - ex * ex;
}

// Dense components are evaluated on terminal steps too and summed with the
// sparse terminal reward.
inline RewardBreakdown total_reward(double r_static, double r_velocity, double r_height,
                                    double r_attitude, const RewardWeights& w,
                                    EpisodeStatus status) {
  RewardBreakdown b;
  b.r_static = r_static;
  b.r_velocity = r_velocity;
  b.r_height = r_height;
  b.r_attitude = r_attitude;
  switch (status) {
    case EpisodeStatus::reached_goal: b.r_terminal = w.r_goal; break;
    case EpisodeStatus::collided: b.r_terminal = w.r_collision; break;
    case EpisodeStatus::out_of_bounds: b.r_terminal = w.r_limit; break;
    default: b.r_terminal = 0.0; break;
  }
  b.total = w.w_static * b.r_static + w.w_velocity * b.r_velocity + w.w_height * b.r_height +
            w.w_attitude * b.r_attitude + b.r_terminal;
  return b;
}

}  // namespace asyncnav
