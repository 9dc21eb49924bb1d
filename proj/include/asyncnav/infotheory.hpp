#pragma once

// Numerical verification of the delay-conditioning claims on toy MDPs:
// the Law-of-Total-Variance split of the return variance into within-delay
// and across-delay parts, and the conditional-entropy inequality
// H(S|O) <= H(S|O') where O = (O', k) augments the observation with the
// discrete age k.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "asyncnav/core.hpp"

namespace asyncnav {

// Finite Markov chain with a fixed policy folded into the transitions,
// state-dependent reward, and a random discrete observation delay:
// O' = S_{t-k}, k ~ aoi_probs, chain started from its stationary law.
struct ToyMdp {
  int n_states = 0;
  std::vector<double> transition;  // row-major [s][s']
  std::vector<double> reward;      // r(s)
  double gamma = 0.9;
  std::vector<double> aoi_probs;   // p(k), k = 0..K-1
  int horizon = 60;                // return truncation

  double p(int s, int s2) const { return transition[static_cast<size_t>(s) * n_states + s2]; }
};

inline ToyMdp toy_chain(int delay_levels) {
  ToyMdp mdp;
  mdp.n_states = 3;
  mdp.transition = {0.7, 0.3, 0.0,
                    0.2, 0.6, 0.2,
                    0.0, 0.3, 0.7};
  mdp.reward = {0.0, 0.5, 2.0};
  mdp.gamma = 0.9;
  mdp.aoi_probs.assign(delay_levels, 1.0 / delay_levels);
  mdp.horizon = 60;
  return mdp;
}

namespace detail {

inline std::vector<double> stationary(const ToyMdp& mdp) {
  std::vector<double> pi(mdp.n_states, 1.0 / mdp.n_states), next(mdp.n_states, 0.0);
  for (int it = 0; it < 20000; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < mdp.n_states; ++s)
      for (int s2 = 0; s2 < mdp.n_states; ++s2) next[s2] += pi[s] * mdp.p(s, s2);
    std::swap(pi, next);
  }
  return pi;
}

// k-step transition kernels P^0..P^{K-1}.
inline std::vector<std::vector<double>> powers(const ToyMdp& mdp, int count) {
  const int n = mdp.n_states;
  std::vector<std::vector<double>> out;
  std::vector<double> cur(static_cast<size_t>(n) * n, 0.0);
  for (int s = 0; s < n; ++s) cur[static_cast<size_t>(s) * n + s] = 1.0;
  out.push_back(cur);
  for (int k = 1; k < count; ++k) {
    std::vector<double> next(static_cast<size_t>(n) * n, 0.0);
    for (int s = 0; s < n; ++s)
      for (int m = 0; m < n; ++m)
        for (int s2 = 0; s2 < n; ++s2)
          next[static_cast<size_t>(s) * n + s2] += out.back()[static_cast<size_t>(s) * n + m] *
                                                   mdp.p(m, s2);
    out.push_back(std::move(next));
  }
  return out;
}

// First and second moments of the truncated return, by backward recursion.
inline void return_moments(const ToyMdp& mdp, std::vector<double>& v, std::vector<double>& u) {
  const int n = mdp.n_states;
  v.assign(n, 0.0);
  u.assign(n, 0.0);
  std::vector<double> v_next(n, 0.0), u_next(n, 0.0);
  for (int h = 0; h < mdp.horizon; ++h) {
    for (int s = 0; s < n; ++s) {
      double ev = 0.0, eu = 0.0;
      for (int s2 = 0; s2 < n; ++s2) {
        ev += mdp.p(s, s2) * v[s2];
        eu += mdp.p(s, s2) * u[s2];
      }
      const double r = mdp.reward[s];
      v_next[s] = r + mdp.gamma * ev;
      u_next[s] = r * r + 2.0 * mdp.gamma * r * ev + mdp.gamma * mdp.gamma * eu;
    }
    v.swap(v_next);
    u.swap(u_next);
  }
}

inline int sample_categorical(const double* probs, int n, Rng& rng) {
  double u = rng.uniform();
  for (int i = 0; i < n - 1; ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  return n - 1;
}

inline double rollout_return(const ToyMdp& mdp, int s0, Rng& rng) {
  double g = 0.0, disc = 1.0;
  int s = s0;
  for (int h = 0; h < mdp.horizon; ++h) {
    g += disc * mdp.reward[s];
    disc *= mdp.gamma;
    s = sample_categorical(&mdp.transition[static_cast<size_t>(s) * mdp.n_states], mdp.n_states,
                           rng);
  }
  return g;
}

struct BatchedEstimate {
  double value = 0.0;
  double se = 0.0;
};

inline BatchedEstimate batch_stats(const std::vector<double>& batch_values) {
  BatchedEstimate e;
  const double n = static_cast<double>(batch_values.size());
  e.value = std::accumulate(batch_values.begin(), batch_values.end(), 0.0) / n;
  double var = 0.0;
  for (double b : batch_values) var += (b - e.value) * (b - e.value);
  e.se = std::sqrt(var / (n - 1.0) / n);
  return e;
}

}  // namespace detail

struct LtvExact {
  double var_given_oprime = 0.0;   // Var(G | O' = o)
  double mean_within = 0.0;        // E_k[Var(G | O)]
  double var_across = 0.0;         // Var_k(E[G | O])
};

// Exact mixture-over-delay decomposition for a fixed observed state.
inline LtvExact ltv_exact(const ToyMdp& mdp, int o_prime) {
  std::vector<double> v, u;
  detail::return_moments(mdp, v, u);
  const auto pk = detail::powers(mdp, static_cast<int>(mdp.aoi_probs.size()));
  const int n = mdp.n_states;

  LtvExact out;
  double mean_total = 0.0, second_total = 0.0;
  std::vector<double> mu_k(mdp.aoi_probs.size(), 0.0), var_k(mdp.aoi_probs.size(), 0.0);
  for (size_t k = 0; k < mdp.aoi_probs.size(); ++k) {
    double m1 = 0.0, m2 = 0.0;
    for (int s = 0; s < n; ++s) {
      const double w = pk[k][static_cast<size_t>(o_prime) * n + s];
      m1 += w * v[s];
      m2 += w * u[s];
    }
    mu_k[k] = m1;
    var_k[k] = m2 - m1 * m1;
    mean_total += mdp.aoi_probs[k] * m1;
    second_total += mdp.aoi_probs[k] * m2;
  }
  out.var_given_oprime = second_total - mean_total * mean_total;
  for (size_t k = 0; k < mdp.aoi_probs.size(); ++k) {
    out.mean_within += mdp.aoi_probs[k] * var_k[k];
    out.var_across += mdp.aoi_probs[k] * (mu_k[k] - mean_total) * (mu_k[k] - mean_total);
  }
  return out;
}

// Exact conditional entropies H(S|O') and H(S|(O', k)) over the stationary
// joint law, natural log.
inline std::pair<double, double> conditional_entropies(const ToyMdp& mdp) {
  const auto pi = detail::stationary(mdp);
  const auto pk = detail::powers(mdp, static_cast<int>(mdp.aoi_probs.size()));
  const int n = mdp.n_states;

  double h_oprime = 0.0, h_o = 0.0;
  for (int o = 0; o < n; ++o) {
    // p(s | o') marginalizes the delay; p(o') = pi(o')
    for (int s = 0; s < n; ++s) {
      double p_so = 0.0;
      for (size_t k = 0; k < mdp.aoi_probs.size(); ++k)
        p_so += mdp.aoi_probs[k] * pi[o] * pk[k][static_cast<size_t>(o) * n + s];
      if (p_so > 0.0) h_oprime -= p_so * std::log(p_so / pi[o]);
    }
    for (size_t k = 0; k < mdp.aoi_probs.size(); ++k) {
      const double p_ok = pi[o] * mdp.aoi_probs[k];
      for (int s = 0; s < n; ++s) {
        const double p_sok = p_ok * pk[k][static_cast<size_t>(o) * n + s];
        if (p_sok > 0.0) h_o -= p_sok * std::log(p_sok / p_ok);
      }
    }
  }
  return {h_oprime, h_o};
}

struct LtvReport {
  int o_prime = 0;
  // independent Monte Carlo estimates and their batch-means standard errors
  double mc_lhs = 0.0, se_lhs = 0.0;
  double mc_within = 0.0, se_within = 0.0;
  double mc_across = 0.0, se_across = 0.0;
  double combined_se = 0.0;
  double residual = 0.0;  // |lhs - (within + across)|
  LtvExact exact;
  double h_given_oprime = 0.0;
  double h_given_o = 0.0;
  bool identity_ok = false;
  bool excess_positive = false;
  bool entropy_ok = false;
};

// Monte Carlo LTV check at a fixed observed state. The three terms are
// estimated from independent sample streams, so the identity is a real
// consistency check rather than an algebraic tautology; batch means give
// the standard errors.
inline LtvReport variance_decomposition_check(const ToyMdp& mdp, int o_prime, size_t n_samples,
                                              uint64_t seed = 12345, int n_batches = 20) {
  if (mdp.n_states <= 0 || mdp.aoi_probs.empty())
    throw std::invalid_argument("variance_decomposition_check: malformed toy MDP");
  const int n = mdp.n_states;
  const int K = static_cast<int>(mdp.aoi_probs.size());
  const auto pk = detail::powers(mdp, K);
  const size_t per_batch = std::max<size_t>(2, n_samples / n_batches);

  LtvReport rep;
  rep.o_prime = o_prime;
  rep.exact = ltv_exact(mdp, o_prime);

  // draw (k, s_t, G) starting from O' = o_prime
  const auto draw = [&](Rng& rng, int* k_out) {
    const int k = detail::sample_categorical(mdp.aoi_probs.data(), K, rng);
    const int s =
        detail::sample_categorical(&pk[k][static_cast<size_t>(o_prime) * n], n, rng);
    if (k_out != nullptr) *k_out = k;
    return detail::rollout_return(mdp, s, rng);
  };

  {  // LHS: Var(G | O'), delay marginalized
    Rng rng(derive_seed(seed, 1));
    std::vector<double> batches(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      double s1 = 0.0, s2 = 0.0;
      for (size_t i = 0; i < per_batch; ++i) {
        const double g = draw(rng, nullptr);
        s1 += g;
        s2 += g * g;
      }
      const double m = s1 / per_batch;
      batches[b] = s2 / per_batch - m * m;
    }
    const auto e = detail::batch_stats(batches);
    rep.mc_lhs = e.value;
    rep.se_lhs = e.se;
  }
  {  // E_k[ Var(G | O) ]
    Rng rng(derive_seed(seed, 2));
    std::vector<double> batches(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      std::vector<double> s1(K, 0.0), s2(K, 0.0), cnt(K, 0.0);
      for (size_t i = 0; i < per_batch; ++i) {
        int k = 0;
        const double g = draw(rng, &k);
        s1[k] += g;
        s2[k] += g * g;
        cnt[k] += 1.0;
      }
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        if (cnt[k] < 2.0) continue;
        const double m = s1[k] / cnt[k];
        acc += mdp.aoi_probs[k] * (s2[k] / cnt[k] - m * m);
      }
      batches[b] = acc;
    }
    const auto e = detail::batch_stats(batches);
    rep.mc_within = e.value;
    rep.se_within = e.se;
  }
  {  // Var_k( E[G | O] )
    Rng rng(derive_seed(seed, 3));
    std::vector<double> batches(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      std::vector<double> s1(K, 0.0), cnt(K, 0.0);
      for (size_t i = 0; i < per_batch; ++i) {
        int k = 0;
        const double g = draw(rng, &k);
        s1[k] += g;
        cnt[k] += 1.0;
      }
      double mean = 0.0;
      std::vector<double> mu(K, 0.0);
      for (int k = 0; k < K; ++k) {
        mu[k] = cnt[k] > 0.0 ? s1[k] / cnt[k] : 0.0;
        mean += mdp.aoi_probs[k] * mu[k];
      }
      double acc = 0.0;
      for (int k = 0; k < K; ++k)
        acc += mdp.aoi_probs[k] * (mu[k] - mean) * (mu[k] - mean);
      batches[b] = acc;
    }
    const auto e = detail::batch_stats(batches);
    rep.mc_across = e.value;
    rep.se_across = e.se;
  }

  rep.combined_se = std::sqrt(rep.se_lhs * rep.se_lhs + rep.se_within * rep.se_within +
                              rep.se_across * rep.se_across);
  rep.residual = std::abs(rep.mc_lhs - (rep.mc_within + rep.mc_across));
  rep.identity_ok = rep.residual <= 3.0 * rep.combined_se;
  rep.excess_positive = K > 1 ? rep.mc_across > 3.0 * rep.se_across : true;

  const auto [h_op, h_o] = conditional_entropies(mdp);
  rep.h_given_oprime = h_op;
  rep.h_given_o = h_o;
  rep.entropy_ok = h_o <= h_op + 1e-12;
  return rep;
}

// H(Y|X) per the definitional sum, natural log: joint given row-major
// p[x][y], support sizes (nx, ny).
inline double conditional_entropy(const std::vector<double>& joint, int nx, int ny) {
  double h = 0.0;
  for (int x = 0; x < nx; ++x) {
    double px = 0.0;
    for (int y = 0; y < ny; ++y) px += joint[static_cast<size_t>(x) * ny + y];
    if (px <= 0.0) continue;
    for (int y = 0; y < ny; ++y) {
      const double pxy = joint[static_cast<size_t>(x) * ny + y];
      if (pxy > 0.0) h -= pxy * std::log(pxy / px);
    }
  }
  return h;
}

// Conditioning on more variables never increases conditional entropy:
// H(S | A, B) <= H(S | A) over random joint distributions p(s, a, b).
// Returns the maximum violation observed (<= 0 means the inequality held).
inline double entropy_monotonicity_max_violation(int trials, uint64_t seed, int ns = 4,
                                                 int na = 3, int nb = 3) {
  Rng rng(seed);
  double worst = -1e300;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> joint(static_cast<size_t>(ns) * na * nb);
    double total = 0.0;
    for (auto& p : joint) {
      p = rng.uniform();
      total += p;
    }
    for (auto& p : joint) p /= total;

    // p(a, s) and p((a,b), s) reshaped for the definitional sum
    std::vector<double> ja(static_cast<size_t>(na) * ns, 0.0);
    std::vector<double> jab(static_cast<size_t>(na) * nb * ns, 0.0);
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < nb; ++b) {
          const double p = joint[(static_cast<size_t>(s) * na + a) * nb + b];
          ja[static_cast<size_t>(a) * ns + s] += p;
          jab[(static_cast<size_t>(a) * nb + b) * ns + s] += p;
        }
    const double h_a = conditional_entropy(ja, na, ns);
    const double h_ab = conditional_entropy(jab, na * nb, ns);
    worst = std::max(worst, h_ab - h_a);
  }
  return worst;
}

}  // namespace asyncnav
