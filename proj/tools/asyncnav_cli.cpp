// Command-line front end: train / eval / ablate / project / bench /
// aoi-trace / verify. All file outputs except bench timings are
// byte-reproducible for identical config + seeds.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "asyncnav/asyncnav.hpp"

namespace fs = std::filesystem;
using namespace asyncnav;

namespace {

ConfigFile load_config(const std::string& path) {
  if (path.empty()) {
    std::istringstream empty;
    return ConfigFile::parse(empty);
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return ConfigFile::parse(in);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  return out;
}

Network load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return Network::load(in);
}

nlohmann::ordered_json suite_report_json(const SuiteReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["trials"] = r.trials;
  j["success"] = r.n_success;
  j["collision"] = r.n_collision;
  j["timeout"] = r.n_timeout;
  j["out_of_bounds"] = r.n_out_of_bounds;
  j["success_rate"] = r.success_rate();
  j["success_wilson95"] = {r.success_ci.lo, r.success_ci.hi};
  j["mean_speed"] = r.mean_speed;
  j["mean_aoi"] = r.mean_aoi;
  j["max_aoi"] = r.max_aoi;
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"asyncnav: asynchronous perception/control navigation stack"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir = ".";
  uint64_t seed = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_flag("--quiet", quiet, "suppress progress output");

  auto* cmd_train = app.add_subcommand("train", "two-stage curriculum training");
  std::string train_checkpoint = "checkpoint.txt";
  cmd_train->add_option("--checkpoint-name", train_checkpoint, "checkpoint file name");

  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint under a mode");
  std::string eval_mode = "proposed", eval_checkpoint;
  int eval_trials = -1;
  bool eval_records = false;
  cmd_eval->add_option("--mode", eval_mode, "proposed|ideal|no_tem|sync_baseline");
  cmd_eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  cmd_eval->add_option("--trials", eval_trials, "episode count (overrides config)");
  cmd_eval->add_flag("--records", eval_records, "write per-episode records");

  auto* cmd_ablate = app.add_subcommand("ablate", "speed/density ablation matrix");
  std::string ablate_checkpoint;
  std::vector<double> ablate_speeds{1.0, 2.5, 4.0};
  std::vector<double> ablate_densities{0.10, 0.18, 0.25};
  double fixed_density = 0.25, fixed_speed = 4.0;
  int ablate_trials = -1;
  cmd_ablate->add_option("--checkpoint", ablate_checkpoint, "checkpoint file")->required();
  cmd_ablate->add_option("--speeds", ablate_speeds, "speed axis values");
  cmd_ablate->add_option("--densities", ablate_densities, "density axis values");
  cmd_ablate->add_option("--fixed-density", fixed_density, "density for the speed axis");
  cmd_ablate->add_option("--fixed-speed", fixed_speed, "speed for the density axis");
  cmd_ablate->add_option("--trials", ablate_trials, "episodes per cell (overrides config)");

  auto* cmd_project = app.add_subcommand("project", "point cloud file -> pseudo-image file");
  std::string project_in, project_out;
  cmd_project->add_option("cloud", project_in, "input cloud, 'x y z' per line")->required();
  cmd_project->add_option("image", project_out, "output pseudo-image")->required();

  auto* cmd_bench = app.add_subcommand("bench", "module latency benchmark");
  std::vector<size_t> bench_sizes{1000, 5000, 20000};
  int bench_reps = 100;
  cmd_bench->add_option("--sizes", bench_sizes, "cloud sizes");
  cmd_bench->add_option("--reps", bench_reps, "repetitions (>= 30)");

  auto* cmd_trace = app.add_subcommand("aoi-trace", "schedule sawtooth export");
  double trace_horizon = 2.0;
  cmd_trace->add_option("--horizon", trace_horizon, "trace horizon (s)");

  auto* cmd_verify = app.add_subcommand("verify", "variance/entropy checks on toy MDPs");
  size_t verify_samples = 1000000;
  cmd_verify->add_option("--samples", verify_samples, "Monte Carlo samples per term");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  const ConfigFile cfg = load_config(config_path);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  if (cmd_train->parsed()) {
    TrainConfig train_cfg = load_train_config(cfg);
    ArchConfig arch = load_arch_config(cfg, train_cfg.env.lidar.spec);
    cfg.reject_unknown_keys();
    train_cfg.master_seed = seed;
    Network net(arch, seed);
    auto metrics = open_out(out / "metrics.log");
    const TrainResult result = train(train_cfg, net, &metrics);
    auto ck = open_out(out / train_checkpoint);
    net.save(ck);
    if (!quiet) {
      std::cout << "iterations " << result.metrics.size() << ", episodes "
                << result.episodes_finished << ", stage switch at "
                << result.stage_switch_iteration << (result.diverged ? ", DIVERGED" : "")
                << "\n";
      if (!result.metrics.empty())
        std::cout << "final success_rate " << strformat("%.4f", result.metrics.back().success_rate)
                  << "\n";
    }
    return result.diverged ? 1 : 0;
  }

  if (cmd_eval->parsed()) {
    ExperimentConfig exp = load_experiment_config(cfg);
    cfg.reject_unknown_keys();
    exp.mode = parse_mode(eval_mode);
    exp.master_seed = seed;
    if (eval_trials > 0) exp.trials = eval_trials;
    Network net = load_checkpoint(eval_checkpoint);
    std::vector<EpisodeRecord> episodes;
    const SuiteReport rep = run_suite(exp, net, &episodes);
    auto txt = open_out(out / "suite_report.txt");
    write_suite_report(txt, rep);
    auto js = open_out(out / "suite_report.json");
    js << suite_report_json(rep).dump(2) << "\n";
    if (eval_records) {
      auto recs = open_out(out / "episodes.log");
      for (const auto& e : episodes) write_episode_record(recs, e);
    }
    if (!quiet) write_suite_report(std::cout, rep);
    return 0;
  }

  if (cmd_ablate->parsed()) {
    ExperimentConfig base = load_experiment_config(cfg);
    cfg.reject_unknown_keys();
    base.master_seed = seed;
    if (ablate_trials > 0) base.trials = ablate_trials;
    Network net = load_checkpoint(ablate_checkpoint);
    const AblationGrid grid = ablation_matrix(base, ablate_speeds, ablate_densities, net,
                                              fixed_density, fixed_speed);
    auto txt = open_out(out / "ablation.txt");
    write_ablation_grid(txt, grid);
    if (!quiet) write_ablation_grid(std::cout, grid);
    return 0;
  }

  if (cmd_project->parsed()) {
    EnvConfig env = load_env_config(cfg);
    cfg.reject_unknown_keys();
    std::ifstream in(project_in);
    if (!in) throw std::runtime_error("cannot open cloud file: " + project_in);
    const PointCloud cloud = read_cloud(in);
    const PseudoImage img = project(env.lidar.spec, cloud);
    auto outf = open_out(project_out);
    write_pseudo_image(outf, img);
    if (!quiet)
      std::cout << "projected " << cloud.size() << " points onto " << img.rows() << "x"
                << img.cols() << " grid\n";
    return 0;
  }

  if (cmd_bench->parsed()) {
    EnvConfig env = load_env_config(cfg);
    cfg.reject_unknown_keys();
    const BenchResult res = bench_latency(env.lidar.spec, bench_sizes, bench_reps, seed);
    auto workload = open_out(out / "bench_report.txt");
    write_bench_workload(workload, res, env.lidar.spec);
    auto timings = open_out(out / "bench_timings.txt");
    write_bench_timings(timings, res);
    if (!quiet) write_bench_timings(std::cout, res);
    return 0;
  }

  if (cmd_trace->parsed()) {
    EnvConfig env = load_env_config(cfg);
    cfg.reject_unknown_keys();
    env.schedule.jitter_seed ^= seed;
    const TimelineResult timeline = run_timeline(env.schedule, trace_horizon);
    auto outf = open_out(out / "aoi_trace.txt");
    write_aoi_trace(outf, timeline.aoi);
    if (!quiet)
      std::cout << "ticks " << timeline.aoi.size() << ", events " << timeline.events.size()
                << "\n";
    return 0;
  }

  if (cmd_verify->parsed()) {
    cfg.reject_unknown_keys();
    bool all_ok = true;
    for (int k : {1, 2, 3}) {
      const ToyMdp mdp = toy_chain(k);
      const LtvReport rep = variance_decomposition_check(mdp, 1, verify_samples,
                                                         derive_seed(seed, 77 + k));
      const bool ok = rep.identity_ok && rep.entropy_ok && (k == 1 || rep.excess_positive);
      all_ok = all_ok && ok;
      std::cout << strformat(
          "ltv k_levels=%d lhs=%.6f within=%.6f across=%.6f residual=%.6f (3se=%.6f) "
          "H(S|O')=%.6f H(S|O)=%.6f %s\n",
          k, rep.mc_lhs, rep.mc_within, rep.mc_across, rep.residual, 3.0 * rep.combined_se,
          rep.h_given_oprime, rep.h_given_o, ok ? "PASS" : "FAIL");
    }
    const double violation = entropy_monotonicity_max_violation(100, derive_seed(seed, 99));
    const bool ent_ok = violation <= 1e-12;
    all_ok = all_ok && ent_ok;
    std::cout << strformat("entropy_monotonicity max_violation=%.3e %s\n", violation,
                           ent_ok ? "PASS" : "FAIL");
    return all_ok ? 0 : 1;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
