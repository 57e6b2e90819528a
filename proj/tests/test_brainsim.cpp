#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bbci/brainsim/brain.hpp"

using namespace bbci;
using namespace bbci::brainsim;

namespace {

// Bare 4+4 unit brain with everything zeroed; tests switch pieces on.
BrainConfig bare_config(std::size_t n = 4) {
  BrainConfig cfg;
  cfg.n_a = n;
  cfg.n_b = n;
  cfg.dt_ms = 10.0;
  cfg.tau_ms = 50.0;
  cfg.w_aa = Matrix(n, n);
  cfg.w_bb = Matrix(n, n);
  cfg.w_ba = Matrix(n, n);
  cfg.intent_proj = Matrix(n, 2);
  cfg.readout_g = Matrix(2, n);
  cfg.noise_std = 0.0;
  cfg.obs_noise_std = 0.0;
  cfg.stim_coupling = 1.0;
  cfg.rate_max = 100.0;
  return cfg;
}

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

TEST_CASE("rates decay geometrically with zero weights, inputs and noise") {
  const BrainConfig cfg = bare_config();
  BrainState st = make_initial_state(cfg, 1);
  st.r_a = {40.0, 20.0, 10.0, 5.0};
  const double k = cfg.dt_ms / cfg.tau_ms;
  Vector expect = st.r_a;
  for (int step_i = 0; step_i < 5; ++step_i) {
    StepInputs in;
    step(cfg, st, in);
    for (auto& e : expect) e *= 1.0 - k;
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(st.r_a[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("fully severed pathway carries no intent information") {
  BrainConfig cfg = bare_config();
  cfg.noise_std = 1.5;  // noise on, same seed: draws must not depend on intent
  cfg.obs_noise_std = 0.5;
  for (std::size_t i = 0; i < 4; ++i) {
    cfg.intent_proj(i, 0) = 50.0;
    cfg.intent_proj(i, 1) = -30.0;
  }
  cfg.readout_g(0, 0) = 1.0;
  cfg.readout_g(1, 1) = 1.0;
  cfg = apply_lesion(cfg, 1.0, 9);

  const Vector zero_stim(4, 0.0);
  BrainState s1 = make_initial_state(cfg, 42);
  BrainState s2 = make_initial_state(cfg, 42);
  for (int b = 0; b < 50; ++b) {
    auto [n1, o1] = brain_step(cfg, s1, {1.0, 0.0}, zero_stim);
    auto [n2, o2] = brain_step(cfg, s2, {-1.0, 0.5}, zero_stim);
    s1 = std::move(n1);
    s2 = std::move(n2);
    CHECK(s1.r_b == s2.r_b);
    CHECK(s1.hand_pos == s2.hand_pos);
  }
}

TEST_CASE("one-step stimulation response matches the hand-evaluated update") {
  BrainConfig cfg = bare_config();
  cfg.readout_g(0, 2) = 1.0;  // unit 2 reads out along +x
  BrainState st = make_initial_state(cfg, 1);
  Vector stim(4, 0.0);
  stim[2] = 3.0;  // drive units; coupling 1.0
  auto [next, obs] = brain_step(cfg, st, {0.0, 0.0}, stim);
  const double k = cfg.dt_ms / cfg.tau_ms;  // 0.2
  CHECK(next.r_b[2] == doctest::Approx(k * 3.0).epsilon(1e-12));
  CHECK(next.hand_vel[0] == doctest::Approx(k * 3.0).epsilon(1e-12));
  CHECK(next.hand_vel[1] == 0.0);
  CHECK(next.hand_pos[0] == doctest::Approx(0.01 * k * 3.0).epsilon(1e-12));
  CHECK(obs == next.r_a);
}

TEST_CASE("rates saturate at rate_max and never go negative") {
  BrainConfig cfg = bare_config();
  cfg.noise_std = 30.0;
  cfg.obs_noise_std = 10.0;
  for (std::size_t i = 0; i < 4; ++i) {
    cfg.intent_proj(i, 0) = 500.0;
    cfg.w_ba(i, i) = 5.0;
  }
  BrainState st = make_initial_state(cfg, 3);
  Vector stim(4, 200.0);
  for (int b = 0; b < 200; ++b) {
    StepInputs in;
    in.intent = {1.0, 0.0};
    in.stim_drive = &stim;
    const Vector obs = step(cfg, st, in);
    for (double r : st.r_a) {
      CHECK(r >= 0.0);
      CHECK(r <= cfg.rate_max);
    }
    for (double r : st.r_b) {
      CHECK(r >= 0.0);
      CHECK(r <= cfg.rate_max);
    }
    for (double o : obs) {
      CHECK(o >= 0.0);
      CHECK(o <= cfg.rate_max);
    }
  }
}

TEST_CASE("negative stimulation drive is rejected") {
  const BrainConfig cfg = bare_config();
  BrainState st = make_initial_state(cfg, 1);
  Vector stim(4, 0.0);
  stim[1] = -0.5;
  StepInputs in;
  in.stim_drive = &stim;
  CHECK_THROWS_AS(step(cfg, st, in), std::invalid_argument);
}

TEST_CASE("lesion zeroes exactly round(fraction * entries), deterministically") {
  BrainConfig cfg = bare_config(16);
  Rng rng(4);
  for (std::size_t i = 0; i < cfg.w_ba.size(); ++i) cfg.w_ba.data()[i] = rng.uniform(0.1, 1.0);

  const BrainConfig same = apply_lesion(cfg, 0.0, 5);
  CHECK(same.w_ba == cfg.w_ba);

  const BrainConfig all = apply_lesion(cfg, 1.0, 5);
  for (std::size_t i = 0; i < all.w_ba.size(); ++i) CHECK(all.w_ba.data()[i] == 0.0);

  const BrainConfig most = apply_lesion(cfg, 0.8, 5);
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < most.w_ba.size(); ++i)
    if (most.w_ba.data()[i] == 0.0) ++zeros;
  CHECK(zeros == 205);  // round(0.8 * 256)

  const BrainConfig again = apply_lesion(cfg, 0.8, 5);
  CHECK(again.w_ba == most.w_ba);
  const BrainConfig other_seed = apply_lesion(cfg, 0.8, 6);
  CHECK(!(other_seed.w_ba == most.w_ba));
}

TEST_CASE("hebbian update: pure decay when rates are zero") {
  const BrainConfig cfg = bare_config();
  BrainState st = make_initial_state(cfg, 1);
  st.w_ba_current(1, 2) = 0.4;
  PlasticityParams p;
  p.enabled = true;
  p.eta = 0.01;
  p.lambda_decay = 0.25;
  const BrainState next = hebbian_update(st, p, Vector(4, 0.0), Vector(4, 0.0));
  CHECK(next.w_ba_current(1, 2) == doctest::Approx(0.4 * 0.75).epsilon(1e-12));
}

TEST_CASE("hebbian update: constant co-activity grows linearly until the clip") {
  const BrainConfig cfg = bare_config();
  BrainState st = make_initial_state(cfg, 1);
  PlasticityParams p;
  p.enabled = true;
  p.eta = 1e-4;
  p.lambda_decay = 0.0;
  p.w_clip = 0.5;
  const Vector pre(4, 50.0), post(4, 40.0);
  const double per_step = p.eta * 50.0 * 40.0;  // 0.2
  for (int i = 1; i <= 5; ++i) {
    hebbian_update_inplace(st, p, pre, post);
    const double expect = std::min(p.w_clip, per_step * i);
    CHECK(st.w_ba_current(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(st.w_ba_current(3, 3) == 0.5);  // clipped exactly
}

TEST_CASE("hebbian update is causal: zero previous-bin presynaptic rate, no potentiation") {
  const BrainConfig cfg = bare_config();
  BrainState st = make_initial_state(cfg, 1);
  PlasticityParams p;
  p.enabled = true;
  p.eta = 0.1;
  const Vector pre_zero(4, 0.0);
  const Vector post_high(4, 90.0);  // current-bin rates high on both sides
  const BrainState next = hebbian_update(st, p, pre_zero, post_high);
  CHECK(next.w_ba_current == st.w_ba_current);
}

TEST_CASE("hebbian update requires enabled plasticity") {
  const BrainConfig cfg = bare_config();
  BrainState st = make_initial_state(cfg, 1);
  PlasticityParams p;  // disabled
  CHECK_THROWS_AS(hebbian_update(st, p, Vector(4, 1.0), Vector(4, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("run_trial of one bin equals a single composed step") {
  BrainConfig cfg = bare_config();
  cfg.noise_std = 1.0;
  cfg.obs_noise_std = 0.5;
  for (std::size_t i = 0; i < 4; ++i) cfg.intent_proj(i, 0) = 40.0;
  cfg.readout_g(0, 0) = 0.5;

  TaskSpec task;
  task.target_pos = {3.0, 0.0};
  task.duration_ms = 10.0;

  const BrainState st0 = make_initial_state(cfg, 33);
  PlasticityParams off;
  Vector captured;
  auto [traj, st1] = run_trial(
      cfg, st0, task,
      [&](const Vector& obs) {
        captured = obs;
        return Vector(4, 0.25);
      },
      off);
  REQUIRE(traj.size() == 1);
  CHECK(traj[0].t_ms == 10.0);

  // independent composition: initial observation draw, then one step
  BrainState manual = st0;
  Vector obs0(cfg.n_a);
  for (std::size_t i = 0; i < cfg.n_a; ++i)
    obs0[i] = std::clamp(manual.r_a[i] + cfg.obs_noise_std * manual.rng.gaussian(), 0.0,
                         cfg.rate_max);
  CHECK(obs0 == captured);
  const Vector stim(4, 0.25);
  StepInputs in;
  in.intent = task_intent(task, manual.hand_pos);
  in.stim_drive = &stim;
  step(cfg, manual, in);
  CHECK(manual.hand_pos == traj[0].pos);
  CHECK(manual.r_a == st1.r_a);
  CHECK(manual.r_b == st1.r_b);
}

TEST_CASE("run_trial: zero policy with plasticity disabled leaves weights unchanged") {
  BrainConfig cfg = bare_config();
  cfg.noise_std = 2.0;
  const BrainState st0 = make_initial_state(cfg, 7);
  TaskSpec task;
  task.target_pos = {1.0, 1.0};
  task.duration_ms = 300.0;
  PlasticityParams off;
  auto [traj, st1] =
      run_trial(cfg, st0, task, [&](const Vector&) { return Vector(4, 0.0); }, off);
  CHECK(st1.w_ba_current == st0.w_ba_current);
  CHECK(traj.size() == 30);
}

TEST_CASE("run_trial is bit-deterministic per seed and policy") {
  BrainConfig cfg = bare_config();
  cfg.noise_std = 1.0;
  cfg.obs_noise_std = 0.5;
  TaskSpec task;
  task.target_pos = {2.0, -1.0};
  task.duration_ms = 200.0;
  PlasticityParams off;
  auto policy = [](const Vector& obs) {
    Vector stim(4, 0.0);
    stim[0] = std::min(1.0, obs[0] / 50.0);
    return stim;
  };
  auto [t1, s1] = run_trial(cfg, make_initial_state(cfg, 5), task, policy, off);
  auto [t2, s2] = run_trial(cfg, make_initial_state(cfg, 5), task, policy, off);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].pos == t2[i].pos);
    CHECK(t1[i].vel == t2[i].vel);
  }
  CHECK(s1.r_a == s2.r_a);

  // policy output of the wrong width is rejected
  CHECK_THROWS_AS(
      run_trial(cfg, make_initial_state(cfg, 5), task,
                [](const Vector&) { return Vector(3, 0.0); }, off),
      std::invalid_argument);
}

TEST_CASE("duration must be a multiple of the bin size") {
  const BrainConfig cfg = bare_config();
  TaskSpec task;
  task.target_pos = {1.0, 0.0};
  task.duration_ms = 105.0;
  PlasticityParams off;
  CHECK_THROWS_AS(run_trial(cfg, make_initial_state(cfg, 1), task,
                            [](const Vector&) { return Vector(4, 0.0); }, off),
                  std::invalid_argument);
}

TEST_CASE("trajectory timestamps increase strictly by dt") {
  BrainConfig cfg = bare_config();
  TaskSpec task;
  task.target_pos = {1.0, 0.0};
  task.duration_ms = 100.0;
  PlasticityParams off;
  auto [traj, st] = run_trial(cfg, make_initial_state(cfg, 2), task,
                              [](const Vector&) { return Vector(4, 0.0); }, off);
  for (std::size_t i = 0; i < traj.size(); ++i)
    CHECK(traj[i].t_ms == doctest::Approx((i + 1) * cfg.dt_ms));
}

TEST_CASE("probe of region A with a severed pathway produces no displacement") {
  BrainConfig cfg = bare_config();
  const BrainState st = make_initial_state(cfg, 1);
  const Vec2 resp = probe_site(cfg, st, Region::A, 1, 50.0, 10);
  CHECK(resp[0] == 0.0);
  CHECK(resp[1] == 0.0);
}

TEST_CASE("probe of a region-B unit follows its readout column") {
  BrainConfig cfg = bare_config();
  cfg.readout_g(0, 1) = 1.0;  // unit 1 -> +x
  const BrainState st = make_initial_state(cfg, 1);
  const Vec2 resp = probe_site(cfg, st, Region::B, 1, 20.0, 15);
  CHECK(resp[0] > 0.0);
  CHECK(resp[1] == 0.0);
}

TEST_CASE("probe response is approximately linear below saturation") {
  BrainConfig cfg = bare_config();
  cfg.readout_g(0, 0) = 0.7;
  cfg.readout_g(1, 0) = 0.3;
  const BrainState st = make_initial_state(cfg, 1);
  const Vec2 r1 = probe_site(cfg, st, Region::B, 0, 10.0, 10);
  const Vec2 r2 = probe_site(cfg, st, Region::B, 0, 20.0, 10);
  const double n1 = std::hypot(r1[0], r1[1]);
  const double n2 = std::hypot(r2[0], r2[1]);
  CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("probe validates its arguments") {
  const BrainConfig cfg = bare_config();
  const BrainState st = make_initial_state(cfg, 1);
  CHECK_THROWS_AS(probe_site(cfg, st, Region::A, 99, 10.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(probe_site(cfg, st, Region::A, 0, 0.0, 5), std::invalid_argument);
}

TEST_CASE("brain state snapshots round-trip through the checkpoint container") {
  BrainConfig cfg = bare_config();
  cfg.noise_std = 1.0;
  BrainState st = make_initial_state(cfg, 99);
  Vector stim(4, 0.5);
  for (int i = 0; i < 7; ++i) {
    StepInputs in;
    in.stim_drive = &stim;
    step(cfg, st, in);
  }
  const BrainState back = state_from_checkpoint(state_to_checkpoint(st));
  CHECK(back.r_a == st.r_a);
  CHECK(back.r_b == st.r_b);
  CHECK(back.w_ba_current == st.w_ba_current);
  CHECK(back.hand_pos == st.hand_pos);
  CHECK(back.hand_vel == st.hand_vel);
  CHECK(back.rng.raw_state() == st.rng.raw_state());
}

TEST_CASE("default brain reaches toward the intent when intact") {
  BrainGenSpec spec;
  spec.noise_std = 0.0;
  spec.obs_noise_std = 0.0;
  const BrainConfig cfg = make_default_brain(spec);
  TaskSpec task;
  task.target_pos = {3.0, 0.0};
  task.duration_ms = 1500.0;
  task.success_radius = 0.5;
  PlasticityParams off;
  auto [traj, st] = run_trial(cfg, make_initial_state(cfg, 1), task,
                              [&](const Vector&) { return Vector(cfg.n_b, 0.0); }, off);
  const double initial = std::hypot(task.target_pos[0], task.target_pos[1]);
  const double final_d = dist(traj.back().pos, task.target_pos);
  CHECK(final_d < 0.5 * initial);  // the intact brain performs the task
}
