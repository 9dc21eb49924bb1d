#pragma once

// PPO with generalized advantage estimation and AdamW, trained through the
// asynchronous environment with a two-stage curriculum: stage I runs
// synchronously (perception at the control rate, zero latency, AoI == 0),
// stage II continues under the configured low-rate perception schedule.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/env.hpp"
#include "asyncnav/nn.hpp"
#include "asyncnav/policy.hpp"

namespace asyncnav {

// Runs f(chunk) for chunk in [0, n_chunks) on up to n_threads workers.
// The chunk decomposition is fixed, so results that reduce per-chunk
// buffers in chunk order are independent of the worker count.
template <typename F>
void parallel_for_chunks(int n_chunks, int n_threads, F&& f) {
  n_threads = std::max(1, std::min(n_threads, n_chunks));
  if (n_threads == 1) {
    for (int c = 0; c < n_chunks; ++c) f(c);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w)
    pool.emplace_back([&]() {
      for (int c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) f(c);
    });
  for (auto& t : pool) t.join();
}

struct PpoConfig {
  double clip_ratio = 0.1;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  int epochs = 4;
  int minibatch_size = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.003;
  double learning_rate = 3e-4;
  double weight_decay = 1e-4;
  double max_grad_norm = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  bool valid() const {
    return clip_ratio > 0.0 && clip_ratio < 1.0 && gamma > 0.0 && gamma <= 1.0 &&
           gae_lambda > 0.0 && gae_lambda <= 1.0;
  }
};

// Fixed-capacity rollout storage, time-major: index = step * n_envs + env.
struct RolloutBuffer {
  int n_envs = 0;
  int horizon = 0;
  int proprio_dim = 0;
  int action_dim = 0;

  std::vector<std::shared_ptr<const PseudoImage>> images;
  std::vector<double> proprio;   // [N x proprio_dim]
  std::vector<double> actions;   // [N x action_dim], raw u
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<uint8_t> dones;
  std::vector<int64_t> aoi_ns;
  std::vector<double> bootstrap_values;  // [n_envs]
  std::vector<uint8_t> bootstrap_dones;  // [n_envs]

  void resize(int envs, int steps, int pdim, int adim) {
    n_envs = envs;
    horizon = steps;
    proprio_dim = pdim;
    action_dim = adim;
    const size_t n = static_cast<size_t>(envs) * steps;
    images.assign(n, nullptr);
    proprio.assign(n * pdim, 0.0);
    actions.assign(n * adim, 0.0);
    log_probs.assign(n, 0.0);
    values.assign(n, 0.0);
    rewards.assign(n, 0.0);
    dones.assign(n, 0);
    aoi_ns.assign(n, 0);
    bootstrap_values.assign(envs, 0.0);
    bootstrap_dones.assign(envs, 0);
  }

  size_t size() const { return static_cast<size_t>(n_envs) * horizon; }
  size_t idx(int step, int env) const { return static_cast<size_t>(step) * n_envs + env; }
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Standard recursive GAE per environment column; done flags cut the
// recursion at episode boundaries, the stored bootstrap value closes
// unfinished episodes.
inline GaeResult compute_gae(const RolloutBuffer& buf, double gamma, double lambda) {
  GaeResult out;
  out.advantages.assign(buf.size(), 0.0);
  out.returns.assign(buf.size(), 0.0);
  for (int e = 0; e < buf.n_envs; ++e) {
    double last_adv = 0.0;
    for (int t = buf.horizon - 1; t >= 0; --t) {
      const size_t i = buf.idx(t, e);
      const double nonterminal = buf.dones[i] ? 0.0 : 1.0;
      const double next_value =
          t == buf.horizon - 1 ? buf.bootstrap_values[e] : buf.values[buf.idx(t + 1, e)];
      const double delta = buf.rewards[i] + gamma * next_value * nonterminal - buf.values[i];
      last_adv = delta + gamma * lambda * nonterminal * last_adv;
      out.advantages[i] = last_adv;
      out.returns[i] = last_adv + buf.values[i];
    }
  }
  return out;
}

// Decoupled weight decay: the shrinkage term is independent of the
// gradient moments.
class AdamW {
 public:
  AdamW(size_t n, const PpoConfig& cfg)
      : m_(n, 0.0), v_(n, 0.0), lr_(cfg.learning_rate), beta1_(cfg.adam_beta1),
        beta2_(cfg.adam_beta2), eps_(cfg.adam_eps), wd_(cfg.weight_decay) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_) + lr_ * wd_ * params[i];
    }
  }

 private:
  std::vector<double> m_, v_;
  double lr_, beta1_, beta2_, eps_, wd_;
  long t_ = 0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  bool finite = true;
};

namespace detail {

// Per-sample loss gradient seeded into the network backward pass. `scale`
// folds the 1/minibatch factor.
struct SampleGrad {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

inline SampleGrad ppo_sample_backward(const Network& net, Workspace& ws, const RolloutBuffer& buf,
                                      size_t i, double advantage, double ret,
                                      const PpoConfig& cfg, double scale,
                                      std::vector<double>& grad) {
  const ArchConfig& arch = net.arch();
  net.forward(*buf.images[i], buf.proprio.data() + i * buf.proprio_dim, ws);

  const int ad = arch.action_dim;
  double log_prob_new = 0.0;
  double dlp_da[8], dlp_db[8], dh_da[8], dh_db[8];
  double entropy = 0.0;
  for (int d = 0; d < ad; ++d) {
    const double u = buf.actions[i * ad + d];
    log_prob_new += beta_log_pdf_grad(u, ws.alpha[d], ws.beta[d], dlp_da[d], dlp_db[d]);
    entropy += beta_entropy_grad(ws.alpha[d], ws.beta[d], dh_da[d], dh_db[d]);
  }
  const double ratio = std::exp(log_prob_new - buf.log_probs[i]);
  const double clipped = std::clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio);
  const double s1 = ratio * advantage;
  const double s2 = clipped * advantage;
  const double pg_loss = -std::min(s1, s2);
  const double d_logp = s1 <= s2 ? -advantage * ratio : 0.0;

  const double verr = ws.value - ret;
  const double d_value = 2.0 * cfg.value_coef * verr * scale;

  double d_alpha[8], d_beta[8];
  for (int d = 0; d < ad; ++d) {
    d_alpha[d] = (d_logp * dlp_da[d] - cfg.entropy_coef * dh_da[d]) * scale;
    d_beta[d] = (d_logp * dlp_db[d] - cfg.entropy_coef * dh_db[d]) * scale;
  }
  net.backward(ws, d_alpha, d_beta, d_value, grad);

  return {pg_loss, verr * verr, entropy};
}

}  // namespace detail

// Clipped-surrogate PPO epochs with AdamW. Advantages are normalized once
// per update (mean 0, std 1) before the policy loss. Returns aggregate
// diagnostics; a non-finite loss aborts the update with finite=false.
inline UpdateStats ppo_update(const RolloutBuffer& buf, const GaeResult& gae, Network& net,
                              AdamW& opt, const PpoConfig& cfg, Rng& rng, int n_threads) {
  const size_t n = buf.size();
  std::vector<double> adv = gae.advantages;
  double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double stddev = std::sqrt(var / n) + 1e-8;
  for (double& a : adv) a = (a - mean) / stddev;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  const int n_chunks = 8;
  std::vector<std::vector<double>> chunk_grads(n_chunks);
  std::vector<Workspace> chunk_ws(n_chunks);
  std::vector<detail::SampleGrad> chunk_stats(n_chunks);
  for (auto& ws : chunk_ws) net.prepare(ws);

  std::vector<double> grad(net.param_count(), 0.0);
  UpdateStats stats;
  size_t stat_count = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (size_t start = 0; start < n; start += cfg.minibatch_size) {
      const size_t stop = std::min(n, start + cfg.minibatch_size);
      const size_t m = stop - start;
      const double scale = 1.0 / static_cast<double>(m);

      parallel_for_chunks(n_chunks, n_threads, [&](int c) {
        auto& g = chunk_grads[c];
        g.assign(net.param_count(), 0.0);
        chunk_stats[c] = {};
        const size_t lo = start + m * c / n_chunks;
        const size_t hi = start + m * (c + 1) / n_chunks;
        for (size_t s = lo; s < hi; ++s) {
          const size_t i = order[s];
          const auto sg = detail::ppo_sample_backward(net, chunk_ws[c], buf, i, adv[i],
                                                      gae.returns[i], cfg, scale, g);
          chunk_stats[c].policy_loss += sg.policy_loss;
          chunk_stats[c].value_loss += sg.value_loss;
          chunk_stats[c].entropy += sg.entropy;
        }
      });

      std::fill(grad.begin(), grad.end(), 0.0);
      double pg = 0.0, vl = 0.0, ent = 0.0;
      for (int c = 0; c < n_chunks; ++c) {
        for (size_t i = 0; i < grad.size(); ++i) grad[i] += chunk_grads[c][i];
        pg += chunk_stats[c].policy_loss;
        vl += chunk_stats[c].value_loss;
        ent += chunk_stats[c].entropy;
      }
      stats.policy_loss += pg * scale;
      stats.value_loss += vl * scale;
      stats.entropy += ent * scale;
      ++stat_count;

      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      if (!std::isfinite(norm2)) {
        stats.finite = false;
        return stats;
      }
      if (cfg.max_grad_norm > 0.0) {
        const double norm = std::sqrt(norm2);
        if (norm > cfg.max_grad_norm)
          for (double& g : grad) g *= cfg.max_grad_norm / norm;
      }
      opt.step(net.params(), grad);
    }
  }
  if (stat_count > 0) {
    stats.policy_loss /= static_cast<double>(stat_count);
    stats.value_loss /= static_cast<double>(stat_count);
    stats.entropy /= static_cast<double>(stat_count);
  }
  return stats;
}

struct CurriculumConfig {
  int stage1_max_iters = 150;
  double stage1_success_threshold = 0.7;
  int success_window = 200;           // episodes in the rolling success rate
  int stage1_min_episodes = 100;
  int stage2_iters = 150;
};

struct TrainConfig {
  PpoConfig ppo;
  EnvConfig env;  // stage-II (asynchronous) configuration
  CurriculumConfig curriculum;
  int n_envs = 64;
  int horizon = 128;
  int n_threads = 2;
  bool two_stage = true;  // false: asynchronous from scratch (same budget)
  uint64_t master_seed = 0;
};

struct IterationMetrics {
  int iteration = 0;
  int stage = 1;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double mean_aoi = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  std::vector<IterationMetrics> metrics;
  int stage_switch_iteration = -1;  // first stage-II iteration (1-based)
  bool diverged = false;
  int episodes_finished = 0;
};

inline void write_metrics_header(std::ostream& out) {
  out << "iteration stage mean_return success_rate mean_aoi policy_loss value_loss entropy\n";
}

inline void write_metrics_row(std::ostream& out, const IterationMetrics& m) {
  out << strformat("%d %d %.6f %.6f %.6f %.6f %.6f %.6f\n", m.iteration, m.stage, m.mean_return,
                   m.success_rate, m.mean_aoi, m.policy_loss, m.value_loss, m.entropy);
}

namespace detail {

class RolloutRunner {
 public:
  RolloutRunner(const TrainConfig& cfg, const Network& net, Mode mode)
      : cfg_(cfg), net_(net) {
    EnvConfig env_cfg = cfg.env;
    env_cfg.mode = mode;
    for (int e = 0; e < cfg.n_envs; ++e) {
      envs_.push_back(std::make_unique<AsyncEnv>(env_cfg, &net_));
      sample_rngs_.emplace_back(derive_seed(cfg.master_seed, 0x53414d50u + e));
      episode_counters_.push_back(0);
      episode_returns_.push_back(0.0);
      envs_.back()->begin_episode(episode_seed(e));
      ++episode_counters_[e];
    }
    const int pdim = net.arch().obs_dim() - net.arch().feature_dim;
    buffer_.resize(cfg.n_envs, cfg.horizon, pdim, net.arch().action_dim);
    chunk_ws_.resize(kChunks);
    for (auto& ws : chunk_ws_) net_.prepare(ws);
  }

  // Episodes keep their own seed stream per env, so trajectories are
  // independent of the horizon and worker count.
  uint64_t episode_seed(int e) const {
    return derive_seed(derive_seed(cfg_.master_seed, 0x45505330u + e), episode_counters_[e]);
  }

  const RolloutBuffer& buffer() const { return buffer_; }

  struct RolloutStats {
    double mean_reward = 0.0;
    double mean_aoi = 0.0;
    std::vector<uint8_t> outcomes;  // 1 = reached_goal, per finished episode
    std::vector<double> returns;    // undiscounted, per finished episode
  };

  RolloutStats collect() {
    RolloutStats agg;
    std::vector<std::vector<uint8_t>> chunk_outcomes(kChunks);
    std::vector<std::vector<double>> chunk_returns(kChunks);

    for (int t = 0; t < cfg_.horizon; ++t) {
      parallel_for_chunks(kChunks, cfg_.n_threads, [&](int c) {
        Workspace& ws = chunk_ws_[c];
        for (int e = chunk_lo(c); e < chunk_hi(c); ++e) {
          AsyncEnv& env = *envs_[e];
          const size_t i = buffer_.idx(t, e);
          const Observation& obs = env.observation();
          auto [bp, value] = policy_forward(net_, obs, ws);
          ActionSample act = sample_and_logprob(bp, net_.arch().v_max, sample_rngs_[e]);

          buffer_.images[i] = env.current_image();
          std::copy(obs.x.begin() + net_.arch().feature_dim, obs.x.end(),
                    buffer_.proprio.begin() + i * buffer_.proprio_dim);
          std::copy(act.u.begin(), act.u.end(), buffer_.actions.begin() + i * buffer_.action_dim);
          buffer_.log_probs[i] = act.log_prob;
          buffer_.values[i] = value;
          buffer_.aoi_ns[i] = env.aoi_ns();

          const StepResult res = env.step(act.u);
          buffer_.rewards[i] = res.reward.total;
          const bool done = res.status != EpisodeStatus::running;
          buffer_.dones[i] = done ? 1 : 0;
          episode_returns_[e] += res.reward.total;
          if (done) {
            chunk_outcomes[c].push_back(res.status == EpisodeStatus::reached_goal ? 1 : 0);
            chunk_returns[c].push_back(episode_returns_[e]);
            episode_returns_[e] = 0.0;
            env.begin_episode(episode_seed(e));
            ++episode_counters_[e];
          }
        }
      });
    }
    parallel_for_chunks(kChunks, cfg_.n_threads, [&](int c) {
      Workspace& ws = chunk_ws_[c];
      for (int e = chunk_lo(c); e < chunk_hi(c); ++e) {
        auto [bp, value] = policy_forward(net_, envs_[e]->observation(), ws);
        buffer_.bootstrap_values[e] = value;
      }
    });

    double sum_r = 0.0, sum_aoi = 0.0;
    for (size_t i = 0; i < buffer_.size(); ++i) {
      sum_r += buffer_.rewards[i];
      sum_aoi += ns_to_seconds(buffer_.aoi_ns[i]);
    }
    agg.mean_reward = sum_r / buffer_.size();
    agg.mean_aoi = sum_aoi / buffer_.size();
    for (int c = 0; c < kChunks; ++c) {
      agg.outcomes.insert(agg.outcomes.end(), chunk_outcomes[c].begin(), chunk_outcomes[c].end());
      agg.returns.insert(agg.returns.end(), chunk_returns[c].begin(), chunk_returns[c].end());
    }
    return agg;
  }

 private:
  static constexpr int kChunks = 8;
  int chunk_lo(int c) const { return cfg_.n_envs * c / kChunks; }
  int chunk_hi(int c) const { return cfg_.n_envs * (c + 1) / kChunks; }

  TrainConfig cfg_;
  const Network& net_;
  std::vector<std::unique_ptr<AsyncEnv>> envs_;
  std::vector<Rng> sample_rngs_;
  std::vector<uint64_t> episode_counters_;
  std::vector<double> episode_returns_;
  std::vector<Workspace> chunk_ws_;
  RolloutBuffer buffer_;
};

}  // namespace detail

// Two-stage curriculum training (or asynchronous-from-scratch when
// cfg.two_stage is false). Metrics are logged per iteration; divergence
// (non-finite loss) halts with the current parameters intact.
inline TrainResult train(const TrainConfig& cfg, Network& net, std::ostream* metrics_out) {
  if (!cfg.ppo.valid()) throw std::invalid_argument("train: invalid ppo config");
  TrainResult result;
  AdamW opt(net.param_count(), cfg.ppo);
  Rng shuffle_rng(derive_seed(cfg.master_seed, 0x53485546u));

  std::vector<uint8_t> rolling;  // recent episode outcomes
  if (metrics_out != nullptr) write_metrics_header(*metrics_out);

  const int total_budget = cfg.curriculum.stage1_max_iters + cfg.curriculum.stage2_iters;
  int iteration = 0;
  int stage = cfg.two_stage ? 1 : 2;
  auto runner = std::make_unique<detail::RolloutRunner>(
      cfg, net, stage == 1 ? Mode::ideal : Mode::proposed);

  auto rolling_success = [&]() {
    if (rolling.empty()) return 0.0;
    const size_t n = std::min(rolling.size(), static_cast<size_t>(cfg.curriculum.success_window));
    size_t wins = 0;
    for (size_t i = rolling.size() - n; i < rolling.size(); ++i) wins += rolling[i];
    return static_cast<double>(wins) / static_cast<double>(n);
  };

  int stage1_iters = 0;
  while (iteration < total_budget) {
    ++iteration;
    const auto stats = runner->collect();
    for (uint8_t o : stats.outcomes) rolling.push_back(o);
    result.episodes_finished += static_cast<int>(stats.outcomes.size());

    const GaeResult gae = compute_gae(runner->buffer(), cfg.ppo.gamma, cfg.ppo.gae_lambda);
    const UpdateStats up = ppo_update(runner->buffer(), gae, net, opt, cfg.ppo, shuffle_rng,
                                      cfg.n_threads);

    IterationMetrics m;
    m.iteration = iteration;
    m.stage = stage;
    m.mean_return = stats.returns.empty()
                        ? stats.mean_reward * cfg.horizon
                        : std::accumulate(stats.returns.begin(), stats.returns.end(), 0.0) /
                              static_cast<double>(stats.returns.size());
    m.success_rate = rolling_success();
    m.mean_aoi = stats.mean_aoi;
    m.policy_loss = up.policy_loss;
    m.value_loss = up.value_loss;
    m.entropy = up.entropy;
    result.metrics.push_back(m);
    if (metrics_out != nullptr) write_metrics_row(*metrics_out, m);

    if (!up.finite) {
      result.diverged = true;
      break;
    }

    if (stage == 1) {
      ++stage1_iters;
      const bool hit_threshold =
          static_cast<int>(rolling.size()) >= cfg.curriculum.stage1_min_episodes &&
          rolling_success() >= cfg.curriculum.stage1_success_threshold;
      if (hit_threshold || stage1_iters >= cfg.curriculum.stage1_max_iters) {
        stage = 2;
        result.stage_switch_iteration = iteration + 1;
        rolling.clear();
        runner = std::make_unique<detail::RolloutRunner>(cfg, net, Mode::proposed);
      }
    }
  }
  return result;
}

}  // namespace asyncnav
