#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "asyncnav/config.hpp"
#include "asyncnav/env.hpp"
#include "asyncnav/harness.hpp"
#include "asyncnav/settings.hpp"
#include "asyncnav/stats.hpp"

using namespace asyncnav;

namespace {

// Small grid + short arena so episodes resolve quickly.
EnvConfig tiny_env() {
  EnvConfig cfg;
  cfg.world.area = {1.5, -2.5, 5.5, 2.5};
  cfg.world.bounds = {-1.5, 8.5, -3.5, 3.5, 0.0, 3.0};
  cfg.world.start = {0.0, 0.0, 1.2};
  cfg.world.goal = {7.0, 0.0, 1.2};
  cfg.world.density = 0.15;
  cfg.lidar.spec.d_theta = kPi / 12.0;
  cfg.lidar.spec.d_phi = kPi / 12.0;
  cfg.lidar.spec.r_max = 8.0;
  cfg.limits.time_limit = 4.0;
  cfg.v_des_min = cfg.v_des_max = 2.0;
  return cfg;
}

ArchConfig tiny_arch(const EnvConfig& env) {
  ArchConfig a;
  a.rows = env.lidar.spec.n_phi();
  a.cols = env.lidar.spec.n_theta();
  a.conv1_ch = 4;
  a.conv2_ch = 4;
  a.feature_dim = 8;
  a.hidden1 = 16;
  a.hidden2 = 16;
  return a;
}

}  // namespace

TEST_CASE("ideal mode: AoI is zero at every control tick") {
  EnvConfig cfg = tiny_env();
  cfg.mode = Mode::ideal;
  const ArchConfig arch = tiny_arch(cfg);
  Network net(arch, 1);
  AsyncEnv env(cfg, &net);
  env.begin_episode(42);
  CHECK(env.aoi_ns() == 0);
  std::vector<double> hold(3, 0.5);
  for (int i = 0; i < 150; ++i) {
    const StepResult res = env.step(hold);
    CHECK(env.aoi_ns() == 0);
    if (res.status != EpisodeStatus::running) break;
  }
}

TEST_CASE("proposed mode: env AoI equals the standalone timeline sawtooth") {
  EnvConfig cfg = tiny_env();
  cfg.mode = Mode::proposed;
  cfg.schedule.f_ctrl = 100.0;
  cfg.schedule.f_perc = 10.0;
  cfg.schedule.proc_latency = LatencyModel::constant(0.05);
  const ArchConfig arch = tiny_arch(cfg);
  Network net(arch, 1);
  AsyncEnv env(cfg, &net);
  env.begin_episode(7);

  const TimelineResult timeline = run_timeline(cfg.schedule, 2.0);
  std::vector<double> hold(3, 0.5);
  for (size_t k = 0; k + 1 < timeline.aoi.size(); ++k) {
    CHECK(env.aoi_ns() == timeline.aoi[k].delta_ns);
    const StepResult res = env.step(hold);
    if (res.status != EpisodeStatus::running) break;
  }
}

TEST_CASE("sync_baseline: distinct actions per second equal f_perc") {
  EnvConfig cfg = tiny_env();
  cfg.mode = Mode::sync_baseline;
  cfg.schedule.proc_latency = LatencyModel::constant(0.05);
  cfg.world.density = 0.0;  // keep the episode alive
  cfg.limits.time_limit = 5.0;
  const ArchConfig arch = tiny_arch(cfg);
  Network net(arch, 1);
  AsyncEnv env(cfg, &net);
  env.begin_episode(3);

  int decisions_mid_second = 0;
  std::vector<double> cmd(3, 0.5);  // hover (maps to zero velocity)
  for (int k = 0; k < 400; ++k) {
    const double t = env.state().t;
    const bool decide = env.needs_decision();
    if (decide && t >= 2.0 && t < 3.0) ++decisions_mid_second;
    env.step(decide ? std::optional<std::vector<double>>(cmd) : std::nullopt);
  }
  CHECK(decisions_mid_second == 10);
}

TEST_CASE("proposed mode decides at every tick") {
  EnvConfig cfg = tiny_env();
  cfg.mode = Mode::proposed;
  const ArchConfig arch = tiny_arch(cfg);
  Network net(arch, 1);
  AsyncEnv env(cfg, &net);
  env.begin_episode(3);
  for (int k = 0; k < 50; ++k) {
    CHECK(env.needs_decision());
    env.step(std::vector<double>(3, 0.5));
  }
}

TEST_CASE("no_tem differs from proposed only in the TEM slots") {
  EnvConfig proposed = tiny_env();
  proposed.mode = Mode::proposed;
  EnvConfig ablated = proposed;
  ablated.mode = Mode::no_tem;
  const ArchConfig arch = tiny_arch(proposed);
  Network net(arch, 5);

  AsyncEnv env_a(proposed, &net);
  AsyncEnv env_b(ablated, &net);
  env_a.begin_episode(99);
  env_b.begin_episode(99);

  std::vector<double> cmd{0.6, 0.45, 0.5};
  for (int k = 0; k < 120; ++k) {
    const auto& oa = env_a.observation().x;
    const auto& ob = env_b.observation().x;
    REQUIRE(oa.size() == ob.size());
    const size_t tem_start = oa.size() - kTemDim;
    for (size_t i = 0; i < tem_start; ++i) CHECK(oa[i] == ob[i]);
    for (size_t i = tem_start; i < ob.size(); ++i) CHECK(ob[i] == 0.0);
    CHECK(oa[tem_start + 1] != 0.0);  // cos slot is ~1 when TEM is on
    CHECK(env_a.aoi_ns() == env_b.aoi_ns());
    env_a.step(cmd);
    env_b.step(cmd);
  }
}

TEST_CASE("episode runner is deterministic and bounded") {
  EnvConfig cfg = tiny_env();
  cfg.mode = Mode::proposed;
  const ArchConfig arch = tiny_arch(cfg);
  Network net(arch, 9);
  const EpisodeRecord a = run_episode(cfg, net, 1234, true);
  const EpisodeRecord b = run_episode(cfg, net, 1234, true);
  CHECK(a.outcome == b.outcome);
  CHECK(a.duration == b.duration);
  CHECK(a.mean_speed == b.mean_speed);
  CHECK(a.path_length == b.path_length);
  REQUIRE(a.steps.size() == b.steps.size());
  for (size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].position.x == b.steps[i].position.x);
    CHECK(a.steps[i].reward.total == b.steps[i].reward.total);
  }
  CHECK(a.duration <= cfg.limits.time_limit + 0.05);

  // timestamps strictly increasing
  for (size_t i = 1; i < a.steps.size(); ++i) CHECK(a.steps[i].t > a.steps[i - 1].t);
}

TEST_CASE("run_suite: deterministic, rates partition to one") {
  EnvConfig env = tiny_env();
  const ArchConfig arch = tiny_arch(env);
  Network net(arch, 13);
  ExperimentConfig cfg;
  cfg.env = env;
  cfg.mode = Mode::proposed;
  cfg.trials = 24;
  cfg.master_seed = 555;
  cfg.n_threads = 2;

  const SuiteReport r1 = run_suite(cfg, net);
  cfg.n_threads = 1;
  const SuiteReport r2 = run_suite(cfg, net);

  CHECK(r1.n_success + r1.n_collision + r1.n_timeout + r1.n_out_of_bounds == cfg.trials);
  CHECK(r1.success_rate() + r1.collision_rate() + r1.timeout_rate() + r1.out_of_bounds_rate() ==
        Catch::Approx(1.0).margin(1e-12));

  std::ostringstream t1, t2;
  write_suite_report(t1, r1);
  write_suite_report(t2, r2);
  CHECK(t1.str() == t2.str());  // thread count cannot change the report
  CHECK(r1.success_by_trial == r2.success_by_trial);
}

TEST_CASE("run_suite rejects a checkpoint/grid mismatch") {
  EnvConfig env = tiny_env();
  ArchConfig wrong = tiny_arch(env);
  wrong.rows += 1;
  Network net(wrong, 1);
  ExperimentConfig cfg;
  cfg.env = env;
  cfg.trials = 1;
  CHECK_THROWS_AS(run_suite(cfg, net), std::runtime_error);
}

TEST_CASE("empty world: straight flight succeeds in every mode") {
  EnvConfig env = tiny_env();
  env.world.density = 0.0;
  env.limits.time_limit = 10.0;
  const ArchConfig arch = tiny_arch(env);

  for (Mode m : {Mode::proposed, Mode::ideal, Mode::no_tem, Mode::sync_baseline}) {
    EnvConfig cfg = env;
    cfg.mode = m;
    apply_mode(cfg);
    Network net(arch, 2);
    AsyncEnv e(cfg, &net);
    e.begin_episode(11);
    // scripted straight-ahead at cruise: u = (0.7, 0.5, 0.5) -> +2 m/s body x
    EpisodeStatus status = EpisodeStatus::running;
    for (int k = 0; k < 1000 && status == EpisodeStatus::running; ++k) {
      const bool decide = e.needs_decision();
      status = e.step(decide ? std::optional<std::vector<double>>({0.7, 0.5, 0.5})
                             : std::nullopt)
                   .status;
    }
    CHECK(status == EpisodeStatus::reached_goal);
  }
}

TEST_CASE("config file: parse, defaults, unknown keys") {
  std::istringstream good("world.density = 0.3\nschedule.f_perc = 20 # comment\n");
  ConfigFile cfg = ConfigFile::parse(good);
  const EnvConfig env = load_env_config(cfg);
  CHECK(env.world.density == 0.3);
  CHECK(env.schedule.f_perc == 20.0);
  CHECK(env.schedule.f_ctrl == 100.0);  // default
  CHECK_NOTHROW(cfg.reject_unknown_keys());

  std::istringstream unknown("world.densty = 0.3\n");
  ConfigFile bad = ConfigFile::parse(unknown);
  load_env_config(bad);
  CHECK_THROWS_AS(bad.reject_unknown_keys(), std::runtime_error);

  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(ConfigFile::parse(dup), std::runtime_error);

  std::istringstream noeq("just some text\n");
  CHECK_THROWS_AS(ConfigFile::parse(noeq), std::runtime_error);

  std::istringstream notnum("world.density = abc\n");
  ConfigFile nn = ConfigFile::parse(notnum);
  CHECK_THROWS_AS(load_env_config(nn), std::runtime_error);
}

TEST_CASE("apply_mode: ideal forces synchronous zero-latency perception") {
  EnvConfig cfg = tiny_env();
  cfg.mode = Mode::ideal;
  cfg.schedule.f_perc = 10.0;
  cfg.schedule.proc_latency = LatencyModel::uniform(0.02, 0.08);
  apply_mode(cfg);
  CHECK(cfg.schedule.f_perc == cfg.schedule.f_ctrl);
  CHECK(cfg.schedule.proc_latency.lo == 0.0);
  CHECK(cfg.schedule.proc_latency.hi == 0.0);
}

TEST_CASE("wilson interval and mcnemar basics") {
  const WilsonInterval ci = wilson_interval(80, 100);
  CHECK(ci.point == Catch::Approx(0.8));
  CHECK(ci.lo > 0.70);
  CHECK(ci.hi < 0.88);
  CHECK(mcnemar_exact_p(0, 0) == 1.0);
  CHECK(mcnemar_exact_p(25, 5) < 0.001);
  CHECK(mcnemar_exact_p(10, 10) == Catch::Approx(1.0).margin(0.1));
  CHECK(sign_test_one_sided_p(5, 5) == Catch::Approx(1.0 / 32.0).margin(1e-12));
}

TEST_CASE("mode names round trip") {
  for (Mode m : {Mode::proposed, Mode::ideal, Mode::no_tem, Mode::sync_baseline})
    CHECK(parse_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_mode("bogus"), std::invalid_argument);
}
