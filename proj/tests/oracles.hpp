#pragma once

// Test-only oracles: deliberately naive, independent re-implementations
// used to pin down expected values. These must not share code with the
// library paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/pointcloud.hpp"

namespace oracles {

// Brute-force pseudo-image: for every cell, scan the whole cloud and take
// the min range of the members. Membership is the floor-binned pillar rule
// (theta_i <= theta < theta_{i+1}); same arithmetic as the definition so
// equality is exact.
inline asyncnav::PseudoImage project_bruteforce(const asyncnav::PillarGridSpec& spec,
                                                const asyncnav::PointCloud& cloud) {
  asyncnav::PseudoImage img(spec);
  const int nt = spec.n_theta(), np = spec.n_phi();
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < nt; ++i) {
      double best = spec.r_max;
      for (const auto& p : cloud.points) {
        if (p.theta < spec.theta_min || p.theta >= spec.theta_max) continue;
        if (p.phi < spec.phi_min || p.phi >= spec.phi_max) continue;
        const int bi = static_cast<int>(std::floor((p.theta - spec.theta_min) / spec.d_theta));
        const int bj = static_cast<int>(std::floor((p.phi - spec.phi_min) / spec.d_phi));
        if (bi != i || bj != j) continue;
        best = std::min(best, std::min(p.r, spec.r_max));
      }
      img.at(j, i) = best;
    }
  return img;
}

// Eqs. 5-6 written out verbatim.
inline double static_safety_naive(const std::vector<double>& beams, double L_s, double k,
                                  double c, double q) {
  std::vector<double> logs;
  for (double d : beams) {
    const double p_beam = std::tanh(k * (std::min(d, L_s) / L_s - c)) + 1.0;
    logs.push_back(std::log(p_beam));
  }
  std::sort(logs.begin(), logs.end());
  const size_t idx = static_cast<size_t>(std::floor(q * (logs.size() - 1)));
  return logs[idx];
}

// Eq. 7 written out verbatim.
inline double velocity_reward_naive(const asyncnav::Vec3& v, const asyncnav::Vec3& g_hat,
                                    double v_des, double k_v1, double k_v2, double sigma) {
  const double speed = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
  double r = v.x * g_hat.x + v.y * g_hat.y + v.z * g_hat.z;
  r -= std::pow(std::max(0.0, speed - k_v2 * v_des), 2);
  r -= std::pow(std::max(0.0, k_v1 * v_des - speed), 2);
  if (k_v1 * v_des <= speed && speed <= k_v2 * v_des)
    r += std::exp(-std::pow(speed - v_des, 2) / (2.0 * sigma * sigma));
  return r;
}

// Eq. 8 written out verbatim.
inline double height_penalty_naive(double z, double z_min, double z_max) {
  return -std::pow(std::max(0.0, z - z_max), 2) - std::pow(std::max(0.0, z_min - z), 2);
}

// Eq. 9 from roll/pitch angles directly.
inline double attitude_penalty_naive(double roll, double pitch, double alpha_max) {
  return -std::pow(std::max(0.0, std::abs(pitch) - alpha_max), 2) -
         std::pow(std::max(0.0, std::abs(roll) - alpha_max), 2);
}

// O(T^2) GAE: advantage_t = sum_l (gamma*lambda)^l * delta_{t+l}, cut at
// episode boundaries.
inline std::vector<double> gae_bruteforce(const std::vector<double>& rewards,
                                          const std::vector<double>& values,
                                          const std::vector<int>& dones, double bootstrap,
                                          double gamma, double lambda) {
  const int T = static_cast<int>(rewards.size());
  std::vector<double> deltas(T);
  for (int t = 0; t < T; ++t) {
    const double next_v = t == T - 1 ? bootstrap : values[t + 1];
    deltas[t] = rewards[t] + gamma * next_v * (dones[t] ? 0.0 : 1.0) - values[t];
  }
  std::vector<double> adv(T, 0.0);
  for (int t = 0; t < T; ++t) {
    double coeff = 1.0;
    for (int l = t; l < T; ++l) {
      adv[t] += coeff * deltas[l];
      if (dones[l]) break;
      coeff *= gamma * lambda;
    }
  }
  return adv;
}

}  // namespace oracles
