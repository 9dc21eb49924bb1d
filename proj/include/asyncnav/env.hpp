#pragma once

// Asynchronous rollout environment: a forest world stepped at the control
// rate, a simulated perception pipeline (raycast -> pseudo-image -> conv
// feature) running at the measurement rate with processing latency, and a
// latest-wins channel between them. Dynamics integration is bound to time
// advancement (the state is integrated through every control period <= t
// before any event at t is dispatched), so a zero-latency frame published
// at a tick captures the state the tick sees.

#include <memory>
#include <optional>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/env_mode.hpp"
#include "asyncnav/nn.hpp"
#include "asyncnav/policy.hpp"
#include "asyncnav/reward.hpp"
#include "asyncnav/schedule.hpp"
#include "asyncnav/world.hpp"

namespace asyncnav {

struct EnvConfig {
  WorldConfig world;
  ScheduleConfig schedule;
  LidarModel lidar;
  DynamicsParams dynamics;
  EpisodeLimits limits;
  SafetyParams safety;
  VelocityParams velocity;
  CorridorParams corridor;
  RewardWeights weights;
  Mode mode = Mode::proposed;
  double v_des_min = 1.0;
  double v_des_max = 4.0;
};

// Mode fixes the schedule; ideal forces synchronous zero-latency
// perception. no_tem and sync_baseline share the proposed schedule.
inline void apply_mode(EnvConfig& cfg) {
  if (cfg.mode == Mode::ideal) {
    cfg.schedule.f_perc = cfg.schedule.f_ctrl;
    cfg.schedule.proc_latency = LatencyModel::constant(0.0);
  }
}

struct PerceptionFrame {
  std::shared_ptr<const PseudoImage> image;
  std::vector<double> feature;
};

struct StepResult {
  RewardBreakdown reward;
  EpisodeStatus status = EpisodeStatus::running;
};

class AsyncEnv {
 public:
  AsyncEnv(const EnvConfig& cfg, const Network* net) : cfg_(cfg), net_(net) {
    apply_mode(cfg_);
    if (!cfg_.schedule.valid()) throw std::invalid_argument("AsyncEnv: invalid schedule config");
    net_->prepare(ws_);
  }

  const EnvConfig& config() const { return cfg_; }
  const ForestWorld& world() const { return world_; }
  const VehicleState& state() const { return state_; }
  double v_des() const { return v_des_; }
  double dt() const { return ns_to_seconds(cfg_.schedule.ctrl_period_ns()); }

  // Observation and bookkeeping at the current decision tick.
  const Observation& observation() const { return obs_; }
  int64_t aoi_ns() const { return aoi_ns_; }
  double aoi() const { return ns_to_seconds(aoi_ns_); }
  std::shared_ptr<const PseudoImage> current_image() const { return channel_frame_.image; }
  const std::vector<double>& current_feature() const { return channel_frame_.feature; }
  Vec3 a_prev() const { return a_prev_; }

  // sync_baseline gates decisions to perception arrivals; other modes
  // decide at every tick.
  bool needs_decision() const {
    if (cfg_.mode != Mode::sync_baseline) return true;
    return channel_t_meas_ns_ > last_consumed_t_meas_ns_;
  }

  void begin_episode(uint64_t episode_seed) {
    world_ = generate_forest(cfg_.world, derive_seed(episode_seed, 1));
    noise_rng_.reseed(derive_seed(episode_seed, 2));
    jitter_rng_.reseed(derive_seed(episode_seed, 3) ^ cfg_.schedule.jitter_seed);
    Rng task_rng(derive_seed(episode_seed, 4));
    v_des_ = cfg_.v_des_max > cfg_.v_des_min
                 ? task_rng.uniform(cfg_.v_des_min, cfg_.v_des_max)
                 : cfg_.v_des_min;

    state_ = VehicleState{};
    state_.p = world_.start;
    const Vec3 to_goal = world_.goal - world_.start;
    state_.q = Quat::from_zyx(std::atan2(to_goal.y, to_goal.x), 0.0, 0.0);
    state_tick_ = 0;
    a_prev_ = Vec3{};
    tick_ = 0;
    clock_.reset();
    pending_.clear();

    // bootstrap frame: empty space stamped t_meas = 0
    auto boot = std::make_shared<PseudoImage>(cfg_.lidar.spec);
    channel_frame_ = {boot, net_->encode_feature(*boot, ws_)};
    channel_t_meas_ns_ = 0;
    last_consumed_t_meas_ns_ = -1;

    schedule_measurement(0);
    arrive_at_tick(0);
  }

  // Advances one control period with the given raw action (nullopt holds
  // the previous command, used by the gated baseline). Returns the reward
  // for the transition and the status at the new tick; the observation is
  // updated to the new tick.
  StepResult step(const std::optional<std::vector<double>>& u) {
    if (u) {
      a_prev_ = scale_action(*u, net_->arch().v_max);
      last_consumed_t_meas_ns_ = channel_t_meas_ns_;
    }
    ++tick_;
    arrive_at_tick(tick_);

    StepResult res;
    res.status = episode_status(world_, state_, cfg_.limits);
    const std::vector<double> beams = beam_ranges(world_, state_, cfg_.lidar.spec);
    const double r_static = static_safety(beams, cfg_.safety);
    const Vec3 g_hat = (world_.goal - state_.p).normalized();
    const double r_velocity = velocity_reward(state_.v, g_hat, v_des_, cfg_.velocity);
    const double r_height = height_penalty(state_.p.z, cfg_.corridor);
    const double r_attitude = attitude_penalty(state_.q, cfg_.corridor);
    res.reward = total_reward(r_static, r_velocity, r_height, r_attitude, cfg_.weights,
                              res.status);
    return res;
  }

 private:
  void schedule_measurement(int64_t k) {
    const int64_t t_meas = k * cfg_.schedule.perc_period_ns();
    clock_.push({t_meas, EventType::measurement_due, k});
    const int64_t latency = cfg_.schedule.proc_latency.sample_ns(jitter_rng_);
    clock_.push({t_meas + latency, EventType::feature_ready, k});
  }

  void capture(int64_t k) {
    for (const auto& p : pending_)
      if (p.first == k) return;
    PointCloud cloud = raycast_lidar(world_, state_, cfg_.lidar, noise_rng_);
    auto image = std::make_shared<PseudoImage>(project(cfg_.lidar.spec, cloud));
    pending_.emplace_back(k, PerceptionFrame{image, net_->encode_feature(*image, ws_)});
  }

  void publish(int64_t k, int64_t t_meas_ns) {
    for (size_t i = 0; i < pending_.size(); ++i) {
      if (pending_[i].first != k) continue;
      if (t_meas_ns >= channel_t_meas_ns_) {  // latest-wins, stale frames dropped
        channel_frame_ = std::move(pending_[i].second);
        channel_t_meas_ns_ = t_meas_ns;
      }
      pending_.erase(pending_.begin() + i);
      return;
    }
  }

  void integrate_through(int64_t t_ns) {
    const int64_t period = cfg_.schedule.ctrl_period_ns();
    while ((state_tick_ + 1) * period <= t_ns) {
      state_ = step_dynamics(state_, ActionCommand{a_prev_}, dt(), cfg_.dynamics);
      ++state_tick_;
    }
  }

  void arrive_at_tick(int64_t k) {
    const int64_t t_tick = k * cfg_.schedule.ctrl_period_ns();
    while (!clock_.empty()) {
      const Event& e = clock_.peek();
      const bool due = e.t_ns < t_tick ||
                       (e.t_ns == t_tick && e.type == EventType::feature_ready);
      if (!due) break;
      const Event ev = clock_.pop();
      integrate_through(ev.t_ns);
      switch (ev.type) {
        case EventType::measurement_due:
          capture(ev.index);
          schedule_measurement(ev.index + 1);
          break;
        case EventType::feature_ready:
          capture(ev.index);  // no-op unless this is the zero-latency path
          publish(ev.index, ev.index * cfg_.schedule.perc_period_ns());
          break;
        default:
          break;
      }
    }
    integrate_through(t_tick);

    aoi_ns_ = t_tick - channel_t_meas_ns_;
    std::array<double, kTemDim> phi{};
    if (cfg_.mode != Mode::no_tem) phi = encode(aoi()).phi;
    obs_ = assemble_observation(channel_frame_.feature, state_, world_.goal, a_prev_, v_des_,
                                phi);
  }

  EnvConfig cfg_;
  const Network* net_;
  mutable Workspace ws_;

  ForestWorld world_;
  VehicleState state_;
  int64_t state_tick_ = 0;
  int64_t tick_ = 0;
  Vec3 a_prev_;
  double v_des_ = 1.0;

  EventClock clock_;
  std::vector<std::pair<int64_t, PerceptionFrame>> pending_;
  PerceptionFrame channel_frame_;
  int64_t channel_t_meas_ns_ = 0;
  int64_t last_consumed_t_meas_ns_ = -1;

  Rng noise_rng_;
  Rng jitter_rng_;

  Observation obs_;
  int64_t aoi_ns_ = 0;
};

}  // namespace asyncnav
