#pragma once

// Evaluation harness: per-mode episode suites over freshly generated
// worlds with paired seeds, the speed/density ablation matrix, and the
// module latency benchmark. Report files carry no wall-clock content, so
// identical config + seeds reproduce them byte for byte (benchmark timing
// lives in a separate, explicitly non-deterministic file).

#include <chrono>
#include <cmath>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/env.hpp"
#include "asyncnav/env_mode.hpp"
#include "asyncnav/learn.hpp"
#include "asyncnav/nn.hpp"
#include "asyncnav/policy.hpp"
#include "asyncnav/stats.hpp"

namespace asyncnav {

struct ExperimentConfig {
  EnvConfig env;
  Mode mode = Mode::proposed;
  int trials = 200;
  uint64_t master_seed = 0;
  int n_threads = 2;
};

struct EpisodeStep {
  double t = 0.0;
  Vec3 position;
  Vec3 velocity;
  Vec3 action;
  RewardBreakdown reward;
  double aoi = 0.0;
};

struct EpisodeRecord {
  uint64_t seed = 0;
  EpisodeStatus outcome = EpisodeStatus::running;
  double mean_speed = 0.0;
  double path_length = 0.0;
  double duration = 0.0;
  double mean_aoi = 0.0;
  double max_aoi = 0.0;
  int decisions = 0;
  std::vector<EpisodeStep> steps;  // filled only when tracing
};

inline void write_episode_record(std::ostream& out, const EpisodeRecord& rec) {
  out << strformat("episode seed=%llu outcome=%s mean_speed=%.6f path_length=%.6f "
                   "duration=%.6f mean_aoi=%.6f max_aoi=%.6f decisions=%d\n",
                   static_cast<unsigned long long>(rec.seed), to_string(rec.outcome),
                   rec.mean_speed, rec.path_length, rec.duration, rec.mean_aoi, rec.max_aoi,
                   rec.decisions);
  for (const auto& s : rec.steps)
    out << strformat("step t=%.3f p=%.4f,%.4f,%.4f v=%.4f,%.4f,%.4f a=%.4f,%.4f,%.4f "
                     "r=%.6f[s=%.4f,v=%.4f,h=%.4f,a=%.4f,T=%.1f] aoi=%.4f\n",
                     s.t, s.position.x, s.position.y, s.position.z, s.velocity.x, s.velocity.y,
                     s.velocity.z, s.action.x, s.action.y, s.action.z, s.reward.total,
                     s.reward.r_static, s.reward.r_velocity, s.reward.r_height,
                     s.reward.r_attitude, s.reward.r_terminal, s.aoi);
}

// One greedy-evaluation episode (mean action); sync_baseline holds the
// previous command between perception arrivals.
inline EpisodeRecord run_episode(const EnvConfig& cfg, const Network& net, uint64_t episode_seed,
                                 bool trace = false) {
  AsyncEnv env(cfg, &net);
  Workspace ws;
  net.prepare(ws);
  env.begin_episode(episode_seed);

  EpisodeRecord rec;
  rec.seed = episode_seed;
  double speed_sum = 0.0, aoi_sum = 0.0;
  long steps = 0;
  Vec3 prev_p = env.state().p;

  const long max_steps =
      static_cast<long>(std::ceil(cfg.limits.time_limit / env.dt())) + 2;
  for (long i = 0; i < max_steps; ++i) {
    std::optional<std::vector<double>> u;
    if (env.needs_decision()) {
      auto [bp, value] = policy_forward(net, env.observation(), ws);
      u = beta_mean(bp);
      ++rec.decisions;
    }
    const double aoi = env.aoi();
    const StepResult res = env.step(u);
    ++steps;
    speed_sum += env.state().v.norm();
    aoi_sum += aoi;
    rec.max_aoi = std::max(rec.max_aoi, aoi);
    rec.path_length += (env.state().p - prev_p).norm();
    prev_p = env.state().p;
    if (trace) {
      EpisodeStep step;
      step.t = env.state().t;
      step.position = env.state().p;
      step.velocity = env.state().v;
      step.action = env.a_prev();
      step.reward = res.reward;
      step.aoi = aoi;
      rec.steps.push_back(step);
    }
    if (res.status != EpisodeStatus::running) {
      rec.outcome = res.status;
      break;
    }
  }
  rec.duration = env.state().t;
  rec.mean_speed = steps > 0 ? speed_sum / static_cast<double>(steps) : 0.0;
  rec.mean_aoi = steps > 0 ? aoi_sum / static_cast<double>(steps) : 0.0;
  if (rec.outcome == EpisodeStatus::running) rec.outcome = EpisodeStatus::timed_out;
  return rec;
}

struct SuiteReport {
  std::string mode;
  int trials = 0;
  int n_success = 0, n_collision = 0, n_timeout = 0, n_out_of_bounds = 0;
  WilsonInterval success_ci;
  double mean_speed = 0.0;
  double mean_aoi = 0.0;
  double max_aoi = 0.0;
  std::vector<uint8_t> success_by_trial;  // paired-seed comparisons

  double success_rate() const { return trials > 0 ? static_cast<double>(n_success) / trials : 0.0; }
  double collision_rate() const { return trials > 0 ? static_cast<double>(n_collision) / trials : 0.0; }
  double timeout_rate() const { return trials > 0 ? static_cast<double>(n_timeout) / trials : 0.0; }
  double out_of_bounds_rate() const {
    return trials > 0 ? static_cast<double>(n_out_of_bounds) / trials : 0.0;
  }
};

// N independent episodes on freshly generated worlds; trial seeds derive
// from the master seed only, so different modes pair by trial index.
inline SuiteReport run_suite(const ExperimentConfig& cfg, const Network& net,
                             std::vector<EpisodeRecord>* episodes_out = nullptr) {
  const auto dims = grid_dims(cfg.env.lidar.spec);
  if (dims.first != net.arch().rows || dims.second != net.arch().cols)
    throw std::runtime_error(
        "run_suite: checkpoint architecture does not match the configured pillar grid");

  EnvConfig env_cfg = cfg.env;
  env_cfg.mode = cfg.mode;
  apply_mode(env_cfg);

  std::vector<EpisodeRecord> episodes(cfg.trials);
  const int n_chunks = std::max(1, std::min(16, cfg.trials));
  parallel_for_chunks(n_chunks, cfg.n_threads, [&](int c) {
    const int lo = cfg.trials * c / n_chunks;
    const int hi = cfg.trials * (c + 1) / n_chunks;
    for (int i = lo; i < hi; ++i)
      episodes[i] = run_episode(env_cfg, net, derive_seed(cfg.master_seed, 0x45564121u + i));
  });

  SuiteReport rep;
  rep.mode = to_string(cfg.mode);
  rep.trials = cfg.trials;
  rep.success_by_trial.resize(cfg.trials, 0);
  double speed_sum = 0.0, aoi_sum = 0.0;
  for (int i = 0; i < cfg.trials; ++i) {
    const auto& e = episodes[i];
    switch (e.outcome) {
      case EpisodeStatus::reached_goal: ++rep.n_success; rep.success_by_trial[i] = 1; break;
      case EpisodeStatus::collided: ++rep.n_collision; break;
      case EpisodeStatus::out_of_bounds: ++rep.n_out_of_bounds; break;
      default: ++rep.n_timeout; break;
    }
    speed_sum += e.mean_speed;
    aoi_sum += e.mean_aoi;
    rep.max_aoi = std::max(rep.max_aoi, e.max_aoi);
  }
  rep.success_ci = wilson_interval(rep.n_success, rep.trials);
  rep.mean_speed = speed_sum / cfg.trials;
  rep.mean_aoi = aoi_sum / cfg.trials;
  if (episodes_out != nullptr) *episodes_out = std::move(episodes);
  return rep;
}

inline void write_suite_report(std::ostream& out, const SuiteReport& r) {
  out << "mode " << r.mode << '\n';
  out << "trials " << r.trials << '\n';
  out << strformat("success %d %.6f\n", r.n_success, r.success_rate());
  out << strformat("collision %d %.6f\n", r.n_collision, r.collision_rate());
  out << strformat("timeout %d %.6f\n", r.n_timeout, r.timeout_rate());
  out << strformat("out_of_bounds %d %.6f\n", r.n_out_of_bounds, r.out_of_bounds_rate());
  out << strformat("success_wilson95 %.6f %.6f\n", r.success_ci.lo, r.success_ci.hi);
  out << strformat("mean_speed %.6f\n", r.mean_speed);
  out << strformat("mean_aoi %.6f\n", r.mean_aoi);
  out << strformat("max_aoi %.6f\n", r.max_aoi);
}

struct AblationCell {
  Mode mode;
  double axis_value = 0.0;
  SuiteReport report;
};

struct AblationGrid {
  std::vector<AblationCell> by_speed;    // density fixed
  std::vector<AblationCell> by_density;  // speed fixed
  double fixed_density = 0.0;
  double fixed_speed = 0.0;
};

// Fig-3-style design: one axis varied at a time, full cross product with
// the four modes.
inline AblationGrid ablation_matrix(const ExperimentConfig& base, const std::vector<double>& speeds,
                                    const std::vector<double>& densities, const Network& net,
                                    double fixed_density, double fixed_speed) {
  if (speeds.empty() || densities.empty())
    throw std::invalid_argument("ablation_matrix: empty axis");
  AblationGrid grid;
  grid.fixed_density = fixed_density;
  grid.fixed_speed = fixed_speed;
  const Mode modes[] = {Mode::proposed, Mode::ideal, Mode::no_tem, Mode::sync_baseline};
  for (double v : speeds)
    for (Mode m : modes) {
      ExperimentConfig cfg = base;
      cfg.mode = m;
      cfg.env.v_des_min = cfg.env.v_des_max = v;
      cfg.env.world.density = fixed_density;
      grid.by_speed.push_back({m, v, run_suite(cfg, net)});
    }
  for (double d : densities)
    for (Mode m : modes) {
      ExperimentConfig cfg = base;
      cfg.mode = m;
      cfg.env.v_des_min = cfg.env.v_des_max = fixed_speed;
      cfg.env.world.density = d;
      grid.by_density.push_back({m, d, run_suite(cfg, net)});
    }
  return grid;
}

inline void write_ablation_grid(std::ostream& out, const AblationGrid& grid) {
  out << strformat("# success rates; density fixed at %.3f\n", grid.fixed_density);
  out << "axis=speed value proposed ideal no_tem sync_baseline\n";
  for (size_t i = 0; i < grid.by_speed.size(); i += 4)
    out << strformat("speed %.3f %.6f %.6f %.6f %.6f\n", grid.by_speed[i].axis_value,
                     grid.by_speed[i].report.success_rate(),
                     grid.by_speed[i + 1].report.success_rate(),
                     grid.by_speed[i + 2].report.success_rate(),
                     grid.by_speed[i + 3].report.success_rate());
  out << strformat("# success rates; speed fixed at %.3f\n", grid.fixed_speed);
  out << "axis=density value proposed ideal no_tem sync_baseline\n";
  for (size_t i = 0; i < grid.by_density.size(); i += 4)
    out << strformat("density %.3f %.6f %.6f %.6f %.6f\n", grid.by_density[i].axis_value,
                     grid.by_density[i].report.success_rate(),
                     grid.by_density[i + 1].report.success_rate(),
                     grid.by_density[i + 2].report.success_rate(),
                     grid.by_density[i + 3].report.success_rate());
}

struct BenchResult {
  struct Row {
    size_t cloud_size = 0;
    double preproc_median_ms = 0.0;
    double preproc_p95_ms = 0.0;
  };
  std::vector<Row> preproc;
  double forward_median_ms = 0.0;
  double forward_p95_ms = 0.0;
  int repetitions = 0;
  uint64_t workload_checksum = 0;  // deterministic given spec + sizes + seed
};

// Median/p95 wall time for (a) cartesian->spherical conversion plus pillar
// projection and (b) the policy forward pass, pure compute (no I/O).
inline BenchResult bench_latency(const PillarGridSpec& spec, const std::vector<size_t>& cloud_sizes,
                                 int repetitions, uint64_t seed = 1) {
  if (repetitions < 30) throw std::invalid_argument("bench_latency: repetitions must be >= 30");
  using clock = std::chrono::steady_clock;
  BenchResult result;
  result.repetitions = repetitions;
  uint64_t checksum = 1469598103934665603ULL;
  const auto mix = [&checksum](uint64_t v) {
    checksum ^= v;
    checksum *= 1099511628211ULL;
  };

  for (size_t n : cloud_sizes) {
    Rng rng(derive_seed(seed, n));
    std::vector<Vec3> cartesian(n);
    for (auto& p : cartesian) {
      // random points across the FOV, some beyond r_max
      const double r = rng.uniform(0.1, spec.r_max * 1.2);
      const double theta = rng.uniform(spec.theta_min, spec.theta_max);
      const double phi = rng.uniform(spec.phi_min, spec.phi_max);
      p = spherical_to_cartesian({r, theta, phi});
    }
    std::vector<double> times_ms(repetitions);
    PseudoImage last;
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto start = clock::now();
      PointCloud cloud;
      cloud.points.reserve(n);
      for (const auto& p : cartesian) cloud.points.push_back(cartesian_to_spherical(p));
      last = project(spec, cloud);
      const auto stop = clock::now();
      times_ms[rep] = std::chrono::duration<double, std::milli>(stop - start).count();
    }
    for (double v : last.values) mix(static_cast<uint64_t>(v * 4096.0));
    result.preproc.push_back({n, median(times_ms), percentile(times_ms, 95.0)});
  }

  {  // policy forward on the default architecture at this grid
    ArchConfig arch;
    arch.rows = spec.n_phi();
    arch.cols = spec.n_theta();
    Network net(arch, derive_seed(seed, 0xBE4Cu));
    Workspace ws;
    net.prepare(ws);
    PseudoImage img(spec);
    Rng rng(derive_seed(seed, 0x1337u));
    for (auto& v : img.values) v = rng.uniform(0.5, spec.r_max);
    std::vector<double> proprio(arch.obs_dim() - arch.feature_dim, 0.1);
    std::vector<double> times_ms(repetitions);
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto start = clock::now();
      net.forward(img, proprio.data(), ws);
      const auto stop = clock::now();
      times_ms[rep] = std::chrono::duration<double, std::milli>(stop - start).count();
    }
    mix(static_cast<uint64_t>(ws.value * 1e6));
    for (int d = 0; d < arch.action_dim; ++d) {
      mix(static_cast<uint64_t>(ws.alpha[d] * 1e6));
      mix(static_cast<uint64_t>(ws.beta[d] * 1e6));
    }
    result.forward_median_ms = median(times_ms);
    result.forward_p95_ms = percentile(times_ms, 95.0);
  }
  result.workload_checksum = checksum;
  return result;
}

// Deterministic part (byte-identical across runs).
inline void write_bench_workload(std::ostream& out, const BenchResult& r,
                                 const PillarGridSpec& spec) {
  out << "bench workload v1\n";
  out << "grid " << spec.n_phi() << ' ' << spec.n_theta() << strformat(" %.9g\n", spec.r_max);
  out << "repetitions " << r.repetitions << '\n';
  out << "cloud_sizes";
  for (const auto& row : r.preproc) out << ' ' << row.cloud_size;
  out << '\n';
  out << "workload_checksum " << r.workload_checksum << '\n';
}

// Measured timings (not reproducible byte-for-byte by nature).
inline void write_bench_timings(std::ostream& out, const BenchResult& r) {
  out << "# measured wall times, milliseconds\n";
  for (const auto& row : r.preproc)
    out << strformat("pc_preproc n=%zu median=%.4f p95=%.4f\n", row.cloud_size,
                     row.preproc_median_ms, row.preproc_p95_ms);
  out << strformat("policy_forward median=%.4f p95=%.4f\n", r.forward_median_ms,
                   r.forward_p95_ms);
}

}  // namespace asyncnav
