#pragma once

// Beta-head policy machinery: digamma/trigamma, per-dimension Beta
// log-density, entropy and their gradients, sampling via Gamma ratios, and
// observation assembly (perception feature, goal-relative pose, velocities,
// previous action, desired speed, temporal encoding).

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/nn.hpp"
#include "asyncnav/temporal.hpp"
#include "asyncnav/world.hpp"

namespace asyncnav {

inline double lgamma_pos(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

// Asymptotic expansion with upward recurrence; ~1e-13 absolute accuracy
// for x > 0.
inline double digamma(double x) {
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv;
  result -= inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
            inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
  return result;
}

inline double trigamma(double x) {
  double result = 0.0;
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  result += inv + 0.5 * inv2 +
            inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 -
            inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0)))));
  return result;
}

struct BetaParams {
  std::vector<double> alpha;
  std::vector<double> beta;
};

struct ActionSample {
  std::vector<double> u;  // raw sample, strictly inside (0,1)
  Vec3 a;                 // scaled body-frame velocity command (m/s)
  double log_prob = 0.0;
};

inline constexpr double kSampleClamp = 1e-6;

inline double beta_log_pdf(double u, double alpha, double beta) {
  const double log_norm = lgamma_pos(alpha) + lgamma_pos(beta) - lgamma_pos(alpha + beta);
  return (alpha - 1.0) * std::log(u) + (beta - 1.0) * std::log1p(-u) - log_norm;
}

inline double beta_log_pdf_grad(double u, double alpha, double beta, double& d_alpha,
                                double& d_beta) {
  const double psi_ab = digamma(alpha + beta);
  d_alpha = std::log(u) - digamma(alpha) + psi_ab;
  d_beta = std::log1p(-u) - digamma(beta) + psi_ab;
  return beta_log_pdf(u, alpha, beta);
}

inline double beta_entropy(double alpha, double beta) {
  const double log_b = lgamma_pos(alpha) + lgamma_pos(beta) - lgamma_pos(alpha + beta);
  return log_b - (alpha - 1.0) * digamma(alpha) - (beta - 1.0) * digamma(beta) +
         (alpha + beta - 2.0) * digamma(alpha + beta);
}

inline double beta_entropy_grad(double alpha, double beta, double& d_alpha, double& d_beta) {
  const double tri_ab = trigamma(alpha + beta);
  d_alpha = -(alpha - 1.0) * trigamma(alpha) + (alpha + beta - 2.0) * tri_ab;
  d_beta = -(beta - 1.0) * trigamma(beta) + (alpha + beta - 2.0) * tri_ab;
  return beta_entropy(alpha, beta);
}

namespace detail {

// Marsaglia-Tsang; the shape < 1 case boosts through Gamma(a + 1).
inline double sample_gamma(double a, Rng& rng) {
  if (a < 1.0) {
    const double u = rng.uniform();
    return sample_gamma(a + 1.0, rng) * std::pow(std::max(u, 1e-300), 1.0 / a);
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

inline double sample_beta(double alpha, double beta, Rng& rng) {
  const double x = detail::sample_gamma(alpha, rng);
  const double y = detail::sample_gamma(beta, rng);
  const double u = x / (x + y);
  return std::clamp(u, kSampleClamp, 1.0 - kSampleClamp);
}

// Independent per-dimension Beta samples; log_prob sums the per-dimension
// log densities at the (clamped) sample. Actions scale to [-v_max, v_max].
inline ActionSample sample_and_logprob(const BetaParams& bp, double v_max, Rng& rng) {
  ActionSample s;
  const size_t n = bp.alpha.size();
  s.u.resize(n);
  double a[3] = {0.0, 0.0, 0.0};
  for (size_t d = 0; d < n; ++d) {
    s.u[d] = sample_beta(bp.alpha[d], bp.beta[d], rng);
    s.log_prob += beta_log_pdf(s.u[d], bp.alpha[d], bp.beta[d]);
    if (d < 3) a[d] = -v_max + 2.0 * v_max * s.u[d];
  }
  s.a = {a[0], a[1], a[2]};
  return s;
}

inline Vec3 scale_action(const std::vector<double>& u, double v_max) {
  return {-v_max + 2.0 * v_max * u[0], -v_max + 2.0 * v_max * u[1],
          -v_max + 2.0 * v_max * u[2]};
}

// Mean action (used for deterministic evaluation): E[u] = alpha/(alpha+beta).
inline std::vector<double> beta_mean(const BetaParams& bp) {
  std::vector<double> u(bp.alpha.size());
  for (size_t d = 0; d < u.size(); ++d) u[d] = bp.alpha[d] / (bp.alpha[d] + bp.beta[d]);
  return u;
}

// The composite state vector: [z, p_rel, q, v, omega, a_prev, v_des, phi].
// p_rel is the goal offset rotated into the body frame.
struct Observation {
  std::vector<double> x;
};

inline Observation assemble_observation(const std::vector<double>& z, const VehicleState& state,
                                        const Vec3& goal, const Vec3& a_prev, double v_des,
                                        const std::array<double, kTemDim>& phi) {
  if (std::abs(state.q.norm() - 1.0) > 1e-6)
    throw std::invalid_argument("assemble_observation: quaternion not normalized");
  Observation obs;
  obs.x.reserve(z.size() + 14 + 3 + kTemDim);
  obs.x.insert(obs.x.end(), z.begin(), z.end());
  const Vec3 p_rel = state.q.rotate_inverse(goal - state.p);
  const double tail[] = {p_rel.x, p_rel.y, p_rel.z,
                         state.q.w, state.q.x, state.q.y, state.q.z,
                         state.v.x, state.v.y, state.v.z,
                         state.omega.x, state.omega.y, state.omega.z,
                         a_prev.x, a_prev.y, a_prev.z,
                         v_des,
                         phi[0], phi[1], phi[2], phi[3]};
  obs.x.insert(obs.x.end(), std::begin(tail), std::end(tail));
  for (double v : obs.x)
    if (!std::isfinite(v))
      throw std::invalid_argument("assemble_observation: non-finite component");
  return obs;
}

// Trunk evaluation over an assembled observation.
inline std::pair<BetaParams, double> policy_forward(const Network& net, const Observation& obs,
                                                    Workspace& ws) {
  const ArchConfig& a = net.arch();
  if (obs.x.size() != static_cast<size_t>(a.obs_dim()))
    throw std::invalid_argument("policy_forward: observation dimension mismatch");
  if (ws.obs.size() != obs.x.size()) net.prepare(ws);
  ws.has_image = false;
  std::copy(obs.x.begin(), obs.x.end(), ws.obs.begin());
  net.forward_trunk(ws);
  BetaParams bp{ws.alpha, ws.beta};
  return {bp, ws.value};
}

}  // namespace asyncnav
