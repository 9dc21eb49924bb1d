#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "asyncnav/core.hpp"
#include "asyncnav/reward.hpp"
#include "oracles.hpp"

using namespace asyncnav;

namespace {

Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  } while (v.norm() < 1e-3);
  return v.normalized();
}

}  // namespace

TEST_CASE("static safety matches the naive oracle on random inputs") {
  Rng rng(21);
  for (int trial = 0; trial < 10000; ++trial) {
    SafetyParams p;
    p.L_s = rng.uniform(0.5, 3.0);
    p.k = rng.uniform(2.0, 10.0);
    p.c = rng.uniform(0.2, 0.8);
    p.q = rng.uniform(0.05, 0.95);
    const int n = 1 + static_cast<int>(rng.uniform_index(40));
    std::vector<double> beams(n);
    for (auto& b : beams) b = rng.uniform(0.0, 12.0);
    const double got = static_safety(beams, p);
    const double want = oracles::static_safety_naive(beams, p.L_s, p.k, p.c, p.q);
    CHECK(std::abs(got - want) <= 1e-12);
  }
}

TEST_CASE("static safety frozen examples") {
  SafetyParams p;  // k=6, c=0.5, L_s=1.5, q=0.1
  std::vector<double> clear(32, 5.0);
  CHECK(static_safety(clear, p) == Catch::Approx(0.690672).margin(1e-5));

  // one beam exactly at c * L_s contributes log(tanh(0) + 1) = 0
  std::vector<double> one_mid(32, 5.0);
  one_mid[7] = p.c * p.L_s;
  SafetyParams low_q = p;
  low_q.q = 0.01;  // selects the worst beam
  CHECK(static_safety(one_mid, low_q) == Catch::Approx(0.0).margin(1e-12));

  std::vector<double> touching(32, 5.0);
  touching[0] = 0.0;
  CHECK(static_safety(touching, low_q) == Catch::Approx(-5.309).margin(1e-3));
}

TEST_CASE("static safety monotone in every beam range") {
  Rng rng(22);
  SafetyParams p;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> beams(16);
    for (auto& b : beams) b = rng.uniform(0.0, 4.0);
    const double base = static_safety(beams, p);
    const size_t which = rng.uniform_index(beams.size());
    std::vector<double> more = beams;
    more[which] += rng.uniform(0.0, 2.0);
    CHECK(static_safety(more, p) >= base - 1e-15);
  }
}

TEST_CASE("static safety rejects empty input") {
  CHECK_THROWS_AS(static_safety(std::vector<double>{}, SafetyParams{}), std::invalid_argument);
}

TEST_CASE("velocity reward matches the naive oracle on random inputs") {
  Rng rng(23);
  for (int trial = 0; trial < 10000; ++trial) {
    VelocityParams p;
    p.k_v1 = rng.uniform(0.1, 0.9);
    p.k_v2 = rng.uniform(1.1, 2.0);
    p.sigma = rng.uniform(0.1, 1.0);
    const Vec3 g = random_unit(rng);
    const Vec3 v{rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0)};
    const double v_des = rng.uniform(0.5, 5.0);
    const double got = velocity_reward(v, g, v_des, p);
    const double want = oracles::velocity_reward_naive(v, g, v_des, p.k_v1, p.k_v2, p.sigma);
    CHECK(std::abs(got - want) <= 1e-12);
  }
}

TEST_CASE("velocity reward frozen examples") {
  VelocityParams p;  // k_v1=0.6, k_v2=1.4, sigma=0.3
  const Vec3 g{1.0, 0.0, 0.0};
  const double v_des = 2.0;

  CHECK(velocity_reward(g * v_des, g, v_des, p) == Catch::Approx(v_des + 1.0).epsilon(1e-12));
  CHECK(velocity_reward({0, 0, 0}, g, v_des, p) ==
        Catch::Approx(-(p.k_v1 * v_des) * (p.k_v1 * v_des)).epsilon(1e-12));

  const double fast = 1.5 * p.k_v2 * v_des;
  CHECK(velocity_reward(g * fast, g, v_des, p) ==
        Catch::Approx(fast - std::pow(0.5 * p.k_v2 * v_des, 2)).epsilon(1e-12));
}

TEST_CASE("velocity reward maximized at v_des over a speed grid") {
  VelocityParams p;
  const Vec3 g{0.0, 1.0, 0.0};
  const double v_des = 2.5;
  const double at_opt = velocity_reward(g * v_des, g, v_des, p);
  for (double s = 0.0; s <= 6.0; s += 1e-3)
    CHECK(velocity_reward(g * s, g, v_des, p) <= at_opt + 1e-12);
}

TEST_CASE("height penalty corridor") {
  CorridorParams p;  // [0.8, 2.5]
  CHECK(height_penalty(1.5, p) == 0.0);
  CHECK(height_penalty(p.z_min, p) == 0.0);
  CHECK(height_penalty(p.z_max, p) == 0.0);
  CHECK(height_penalty(p.z_max + 1.0, p) == Catch::Approx(-1.0).epsilon(1e-12));
  CHECK(height_penalty(p.z_min - 0.3, p) == Catch::Approx(-0.09).epsilon(1e-12));

  Rng rng(24);
  for (int i = 0; i < 10000; ++i) {
    const double z = rng.uniform(-2.0, 6.0);
    const double got = height_penalty(z, p);
    CHECK(std::abs(got - oracles::height_penalty_naive(z, p.z_min, p.z_max)) <= 1e-12);
    CHECK(got <= 0.0);
  }
}

TEST_CASE("attitude penalty from quaternion") {
  CorridorParams p;  // alpha_max = 0.6
  CHECK(attitude_penalty(Quat{}, p) == 0.0);
  CHECK(attitude_penalty(Quat::from_zyx(0.3, p.alpha_max, 0.0), p) == Catch::Approx(0.0).margin(1e-12));
  CHECK(attitude_penalty(Quat::from_zyx(0.0, p.alpha_max + 0.2, 0.0), p) ==
        Catch::Approx(-0.04).epsilon(1e-9));

  Rng rng(25);
  for (int i = 0; i < 10000; ++i) {
    const double roll = rng.uniform(-1.2, 1.2);
    const double pitch = rng.uniform(-1.2, 1.2);
    const double yaw = rng.uniform(-kPi, kPi);
    const Quat q = Quat::from_zyx(yaw, pitch, roll);
    const double got = attitude_penalty(q, p);
    CHECK(got <= 0.0);
    CHECK(std::abs(got - oracles::attitude_penalty_naive(roll, pitch, p.alpha_max)) <= 1e-9);
  }
}

TEST_CASE("total reward composition and terminal selection") {
  RewardWeights w;
  const auto running = total_reward(0.0, 0.0, 0.0, 0.0, w, EpisodeStatus::running);
  CHECK(running.total == 0.0);
  CHECK(running.r_terminal == 0.0);

  const auto goal = total_reward(0.1, 0.2, 0.0, 0.0, w, EpisodeStatus::reached_goal);
  CHECK(goal.r_terminal == w.r_goal);
  CHECK(goal.total ==
        w.w_static * 0.1 + w.w_velocity * 0.2 + w.w_height * 0.0 + w.w_attitude * 0.0 + w.r_goal);

  // dense terms still contribute on terminal steps
  const auto crash = total_reward(-2.0, 0.5, -0.1, 0.0, w, EpisodeStatus::collided);
  CHECK(crash.r_terminal == w.r_collision);
  CHECK(crash.total == w.w_static * -2.0 + w.w_velocity * 0.5 + w.w_height * -0.1 +
                           w.w_attitude * 0.0 + w.r_collision);

  const auto oob = total_reward(0.0, 0.0, 0.0, 0.0, w, EpisodeStatus::out_of_bounds);
  CHECK(oob.r_terminal == w.r_limit);
  const auto timeout = total_reward(0.0, 0.0, 0.0, 0.0, w, EpisodeStatus::timed_out);
  CHECK(timeout.r_terminal == 0.0);
}

TEST_CASE("total reward is linear in the weights") {
  Rng rng(26);
  for (int i = 0; i < 1000; ++i) {
    const double rs = rng.uniform(-5.0, 1.0), rv = rng.uniform(-3.0, 5.0);
    const double rh = rng.uniform(-1.0, 0.0), ra = rng.uniform(-1.0, 0.0);
    RewardWeights w;
    w.w_static = rng.uniform(0.0, 2.0);
    w.w_velocity = rng.uniform(0.0, 2.0);
    w.w_height = rng.uniform(0.0, 2.0);
    w.w_attitude = rng.uniform(0.0, 2.0);

    // additivity in one weight: delta w_static contributes delta * r_static
    RewardWeights w2 = w;
    const double bump = rng.uniform(0.0, 3.0);
    w2.w_static += bump;
    const double base = total_reward(rs, rv, rh, ra, w, EpisodeStatus::running).total;
    const double bumped = total_reward(rs, rv, rh, ra, w2, EpisodeStatus::running).total;
    CHECK(bumped - base == Catch::Approx(bump * rs).margin(1e-9));

    // homogeneity of the dense part (terminal reward is not weighted)
    RewardWeights wx2 = w;
    wx2.w_static *= 2.0;
    wx2.w_velocity *= 2.0;
    wx2.w_height *= 2.0;
    wx2.w_attitude *= 2.0;
    const double doubled = total_reward(rs, rv, rh, ra, wx2, EpisodeStatus::running).total;
    CHECK(doubled == Catch::Approx(2.0 * base).margin(1e-9));

    // the stored breakdown recomposes exactly
    const auto b = total_reward(rs, rv, rh, ra, w, EpisodeStatus::collided);
    CHECK(b.total == w.w_static * b.r_static + w.w_velocity * b.r_velocity +
                         w.w_height * b.r_height + w.w_attitude * b.r_attitude + b.r_terminal);
  }
}
