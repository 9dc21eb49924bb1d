#pragma once

// Maps the flat dotted-key config schema onto the library structs. Every
// key is optional with the library defaults; unknown keys are rejected.
// The schema is documented in docs/config.md.

#include <string>

#include "asyncnav/config.hpp"
#include "asyncnav/env.hpp"
#include "asyncnav/harness.hpp"
#include "asyncnav/learn.hpp"
#include "asyncnav/nn.hpp"

namespace asyncnav {

inline EnvConfig load_env_config(const ConfigFile& cfg) {
  EnvConfig env;
  env.world.density = cfg.get_double("world.density", env.world.density);
  env.world.side_min = cfg.get_double("world.side_min", env.world.side_min);
  env.world.side_max = cfg.get_double("world.side_max", env.world.side_max);
  env.world.area.x0 = cfg.get_double("world.area_x0", env.world.area.x0);
  env.world.area.y0 = cfg.get_double("world.area_y0", env.world.area.y0);
  env.world.area.x1 = cfg.get_double("world.area_x1", env.world.area.x1);
  env.world.area.y1 = cfg.get_double("world.area_y1", env.world.area.y1);
  env.world.bounds.x0 = cfg.get_double("world.bounds_x0", env.world.bounds.x0);
  env.world.bounds.x1 = cfg.get_double("world.bounds_x1", env.world.bounds.x1);
  env.world.bounds.y0 = cfg.get_double("world.bounds_y0", env.world.bounds.y0);
  env.world.bounds.y1 = cfg.get_double("world.bounds_y1", env.world.bounds.y1);
  env.world.bounds.z0 = cfg.get_double("world.bounds_z0", env.world.bounds.z0);
  env.world.bounds.z1 = cfg.get_double("world.bounds_z1", env.world.bounds.z1);
  env.world.start = {cfg.get_double("world.start_x", env.world.start.x),
                     cfg.get_double("world.start_y", env.world.start.y),
                     cfg.get_double("world.start_z", env.world.start.z)};
  env.world.goal = {cfg.get_double("world.goal_x", env.world.goal.x),
                    cfg.get_double("world.goal_y", env.world.goal.y),
                    cfg.get_double("world.goal_z", env.world.goal.z)};
  env.world.clear_radius = cfg.get_double("world.clear_radius", env.world.clear_radius);

  env.lidar.spec.theta_min = cfg.get_double("lidar.theta_min", env.lidar.spec.theta_min);
  env.lidar.spec.theta_max = cfg.get_double("lidar.theta_max", env.lidar.spec.theta_max);
  env.lidar.spec.phi_min = cfg.get_double("lidar.phi_min", env.lidar.spec.phi_min);
  env.lidar.spec.phi_max = cfg.get_double("lidar.phi_max", env.lidar.spec.phi_max);
  env.lidar.spec.d_theta = cfg.get_double("lidar.d_theta", env.lidar.spec.d_theta);
  env.lidar.spec.d_phi = cfg.get_double("lidar.d_phi", env.lidar.spec.d_phi);
  env.lidar.spec.r_max = cfg.get_double("lidar.r_max", env.lidar.spec.r_max);
  env.lidar.noise_std = cfg.get_double("lidar.noise_std", env.lidar.noise_std);

  env.schedule.f_ctrl = cfg.get_double("schedule.f_ctrl", env.schedule.f_ctrl);
  env.schedule.f_perc = cfg.get_double("schedule.f_perc", env.schedule.f_perc);
  const double lat_lo = cfg.get_double("schedule.latency_lo", env.schedule.proc_latency.lo);
  const double lat_hi = cfg.get_double("schedule.latency_hi", lat_lo);
  env.schedule.proc_latency = LatencyModel{lat_lo, lat_hi};
  env.schedule.jitter_seed =
      static_cast<uint64_t>(cfg.get_int("schedule.jitter_seed", 0));

  env.dynamics.tau = cfg.get_double("dynamics.tau", env.dynamics.tau);
  env.dynamics.tau_yaw = cfg.get_double("dynamics.tau_yaw", env.dynamics.tau_yaw);
  env.dynamics.tilt_max = cfg.get_double("dynamics.tilt_max", env.dynamics.tilt_max);

  env.limits.goal_tolerance = cfg.get_double("limits.goal_tolerance", env.limits.goal_tolerance);
  env.limits.vehicle_radius = cfg.get_double("limits.vehicle_radius", env.limits.vehicle_radius);
  env.limits.time_limit = cfg.get_double("limits.time_limit", env.limits.time_limit);

  env.safety.L_s = cfg.get_double("reward.L_s", env.safety.L_s);
  env.safety.k = cfg.get_double("reward.k", env.safety.k);
  env.safety.c = cfg.get_double("reward.c", env.safety.c);
  env.safety.q = cfg.get_double("reward.q", env.safety.q);
  env.velocity.k_v1 = cfg.get_double("reward.k_v1", env.velocity.k_v1);
  env.velocity.k_v2 = cfg.get_double("reward.k_v2", env.velocity.k_v2);
  env.velocity.sigma = cfg.get_double("reward.sigma", env.velocity.sigma);
  env.corridor.z_min = cfg.get_double("reward.z_min", env.corridor.z_min);
  env.corridor.z_max = cfg.get_double("reward.z_max", env.corridor.z_max);
  env.corridor.alpha_max = cfg.get_double("reward.alpha_max", env.corridor.alpha_max);
  env.weights.w_static = cfg.get_double("reward.w_static", env.weights.w_static);
  env.weights.w_velocity = cfg.get_double("reward.w_velocity", env.weights.w_velocity);
  env.weights.w_height = cfg.get_double("reward.w_height", env.weights.w_height);
  env.weights.w_attitude = cfg.get_double("reward.w_attitude", env.weights.w_attitude);
  env.weights.r_goal = cfg.get_double("reward.r_goal", env.weights.r_goal);
  env.weights.r_collision = cfg.get_double("reward.r_collision", env.weights.r_collision);
  env.weights.r_limit = cfg.get_double("reward.r_limit", env.weights.r_limit);
  env.weights.gamma = cfg.get_double("reward.gamma", env.weights.gamma);

  env.v_des_min = cfg.get_double("env.v_des_min", env.v_des_min);
  env.v_des_max = cfg.get_double("env.v_des_max", env.v_des_max);
  return env;
}

inline ArchConfig load_arch_config(const ConfigFile& cfg, const PillarGridSpec& grid) {
  ArchConfig arch;
  arch.rows = grid.n_phi();
  arch.cols = grid.n_theta();
  arch.conv1_ch = static_cast<int>(cfg.get_int("policy.conv1_ch", arch.conv1_ch));
  arch.conv2_ch = static_cast<int>(cfg.get_int("policy.conv2_ch", arch.conv2_ch));
  arch.feature_dim = static_cast<int>(cfg.get_int("policy.feature_dim", arch.feature_dim));
  arch.hidden1 = static_cast<int>(cfg.get_int("policy.hidden1", arch.hidden1));
  arch.hidden2 = static_cast<int>(cfg.get_int("policy.hidden2", arch.hidden2));
  arch.action_dim = static_cast<int>(cfg.get_int("policy.action_dim", arch.action_dim));
  arch.epsilon = cfg.get_double("policy.epsilon", arch.epsilon);
  arch.v_max = cfg.get_double("policy.v_max", arch.v_max);
  return arch;
}

inline TrainConfig load_train_config(const ConfigFile& cfg) {
  TrainConfig train;
  train.env = load_env_config(cfg);
  train.ppo.clip_ratio = cfg.get_double("learn.clip_ratio", train.ppo.clip_ratio);
  train.ppo.gae_lambda = cfg.get_double("learn.gae_lambda", train.ppo.gae_lambda);
  train.ppo.gamma = cfg.get_double("learn.gamma", train.env.weights.gamma);
  train.ppo.epochs = static_cast<int>(cfg.get_int("learn.epochs", train.ppo.epochs));
  train.ppo.minibatch_size =
      static_cast<int>(cfg.get_int("learn.minibatch", train.ppo.minibatch_size));
  train.ppo.value_coef = cfg.get_double("learn.value_coef", train.ppo.value_coef);
  train.ppo.entropy_coef = cfg.get_double("learn.entropy_coef", train.ppo.entropy_coef);
  train.ppo.learning_rate = cfg.get_double("learn.lr", train.ppo.learning_rate);
  train.ppo.weight_decay = cfg.get_double("learn.weight_decay", train.ppo.weight_decay);
  train.ppo.max_grad_norm = cfg.get_double("learn.max_grad_norm", train.ppo.max_grad_norm);
  train.n_envs = static_cast<int>(cfg.get_int("learn.n_envs", train.n_envs));
  train.horizon = static_cast<int>(cfg.get_int("learn.horizon", train.horizon));
  train.n_threads = static_cast<int>(cfg.get_int("learn.threads", train.n_threads));
  train.two_stage = cfg.get_int("learn.two_stage", 1) != 0;
  train.curriculum.stage1_max_iters =
      static_cast<int>(cfg.get_int("learn.stage1_max_iters", train.curriculum.stage1_max_iters));
  train.curriculum.stage1_success_threshold = cfg.get_double(
      "learn.stage1_success_threshold", train.curriculum.stage1_success_threshold);
  train.curriculum.success_window =
      static_cast<int>(cfg.get_int("learn.success_window", train.curriculum.success_window));
  train.curriculum.stage1_min_episodes = static_cast<int>(
      cfg.get_int("learn.stage1_min_episodes", train.curriculum.stage1_min_episodes));
  train.curriculum.stage2_iters =
      static_cast<int>(cfg.get_int("learn.stage2_iters", train.curriculum.stage2_iters));
  return train;
}

inline ExperimentConfig load_experiment_config(const ConfigFile& cfg) {
  ExperimentConfig exp;
  exp.env = load_env_config(cfg);
  exp.mode = parse_mode(cfg.get_string("eval.mode", "proposed"));
  exp.trials = static_cast<int>(cfg.get_int("eval.trials", exp.trials));
  if (cfg.has("eval.v_des"))
    exp.env.v_des_min = exp.env.v_des_max = cfg.get_double("eval.v_des", 2.5);
  if (cfg.has("eval.density")) exp.env.world.density = cfg.get_double("eval.density", 0.2);
  return exp;
}

}  // namespace asyncnav
