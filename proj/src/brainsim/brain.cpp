#include "bbci/brainsim/brain.hpp"

#include <algorithm>
#include <cmath>

#include "bbci/core/kernels.hpp"

namespace bbci::brainsim {

void BrainConfig::validate() const {
  require(n_a > 0 && n_b > 0, "brain: unit counts must be positive");
  require(dt_ms > 0, "brain: dt_ms must be positive");
  require(tau_ms >= dt_ms, "brain: tau_ms must be >= dt_ms");
  require(rate_max > 0, "brain: rate_max must be positive");
  require(noise_std >= 0 && obs_noise_std >= 0, "brain: noise std must be >= 0");
  require(w_aa.rows() == n_a && w_aa.cols() == n_a, "brain: w_aa must be n_a x n_a");
  require(w_bb.rows() == n_b && w_bb.cols() == n_b, "brain: w_bb must be n_b x n_b");
  require(w_ba.rows() == n_b && w_ba.cols() == n_a, "brain: w_ba must be n_b x n_a");
  require(intent_proj.rows() == n_a && intent_proj.cols() == 2,
          "brain: intent_proj must be n_a x 2");
  require(readout_g.rows() == 2 && readout_g.cols() == n_b, "brain: readout_g must be 2 x n_b");
  require(w_aa.all_finite() && w_bb.all_finite() && w_ba.all_finite() &&
              intent_proj.all_finite() && readout_g.all_finite(),
          "brain: weights must be finite");
}

BrainState make_initial_state(const BrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  BrainState st;
  st.r_a.assign(cfg.n_a, 0.0);
  st.r_b.assign(cfg.n_b, 0.0);
  st.w_ba_current = cfg.w_ba;
  st.rng = Rng(seed);
  return st;
}

namespace {

inline double saturate(double x, double rate_max) {
  return std::clamp(x, 0.0, rate_max);
}

}  // namespace

Vector step(const BrainConfig& cfg, BrainState& state, const StepInputs& in) {
  if (in.stim_drive && in.stim_drive->size() != cfg.n_b)
    throw std::invalid_argument("brain step: stim drive has " +
                                std::to_string(in.stim_drive->size()) + " channels, region B has " +
                                std::to_string(cfg.n_b));
  if (in.extra_a && in.extra_a->size() != cfg.n_a)
    throw std::invalid_argument("brain step: extra region-A drive size mismatch");
  if (in.extra_b && in.extra_b->size() != cfg.n_b)
    throw std::invalid_argument("brain step: extra region-B drive size mismatch");
  if (in.stim_drive)
    for (double s : *in.stim_drive)
      if (s < 0.0) throw std::invalid_argument("brain step: stimulation drive must be >= 0");

  const double k = cfg.dt_ms / cfg.tau_ms;

  // Fixed draw order per bin regardless of input values.
  Vector noise_a(cfg.n_a, 0.0), noise_b(cfg.n_b, 0.0), noise_obs(cfg.n_a, 0.0);
  if (in.noise_enabled) {
    for (auto& v : noise_a) v = cfg.noise_std * state.rng.gaussian();
    for (auto& v : noise_b) v = cfg.noise_std * state.rng.gaussian();
    for (auto& v : noise_obs) v = cfg.obs_noise_std * state.rng.gaussian();
  }

  Vector drive_a = kernels::matvec(cfg.w_aa, state.r_a);
  {
    const double ix = in.intent[0], iy = in.intent[1];
    for (std::size_t i = 0; i < cfg.n_a; ++i) {
      drive_a[i] += cfg.intent_proj(i, 0) * ix + cfg.intent_proj(i, 1) * iy + noise_a[i];
      if (in.extra_a) drive_a[i] += (*in.extra_a)[i];
    }
  }

  Vector drive_b = kernels::matvec(cfg.w_bb, state.r_b);
  {
    const Vector from_a = kernels::matvec(state.w_ba_current, state.r_a);
    for (std::size_t i = 0; i < cfg.n_b; ++i) {
      drive_b[i] += from_a[i] + noise_b[i];
      if (in.stim_drive) drive_b[i] += cfg.stim_coupling * (*in.stim_drive)[i];
      if (in.extra_b) drive_b[i] += (*in.extra_b)[i];
    }
  }

  for (std::size_t i = 0; i < cfg.n_a; ++i)
    state.r_a[i] = (1.0 - k) * state.r_a[i] + k * saturate(drive_a[i], cfg.rate_max);
  for (std::size_t i = 0; i < cfg.n_b; ++i)
    state.r_b[i] = (1.0 - k) * state.r_b[i] + k * saturate(drive_b[i], cfg.rate_max);

  state.hand_vel[0] = 0.0;
  state.hand_vel[1] = 0.0;
  for (std::size_t j = 0; j < cfg.n_b; ++j) {
    state.hand_vel[0] += cfg.readout_g(0, j) * state.r_b[j];
    state.hand_vel[1] += cfg.readout_g(1, j) * state.r_b[j];
  }
  const double dt_s = cfg.dt_ms / 1000.0;
  state.hand_pos[0] += dt_s * state.hand_vel[0];
  state.hand_pos[1] += dt_s * state.hand_vel[1];

  Vector observed(cfg.n_a);
  for (std::size_t i = 0; i < cfg.n_a; ++i)
    observed[i] = saturate(state.r_a[i] + noise_obs[i], cfg.rate_max);
  return observed;
}

std::pair<BrainState, Vector> brain_step(const BrainConfig& cfg, const BrainState& state,
                                         const Vec2& intent, const Vector& stim_drive) {
  BrainState next = state;
  StepInputs in;
  in.intent = intent;
  in.stim_drive = &stim_drive;
  Vector observed = step(cfg, next, in);
  return {std::move(next), std::move(observed)};
}

BrainConfig apply_lesion(const BrainConfig& cfg, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, "apply_lesion: fraction must be in [0,1]");
  BrainConfig out = cfg;
  const std::size_t total = cfg.w_ba.size();
  const std::size_t n_zero =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  if (n_zero == 0) return out;

  std::vector<std::size_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = total; i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(idx[i], idx[j]);
  }
  for (std::size_t i = 0; i < n_zero; ++i) out.w_ba.data()[idx[i]] = 0.0;
  return out;
}

void hebbian_update_inplace(BrainState& state, const PlasticityParams& p,
                            const Vector& r_a_prev, const Vector& r_b_now) {
  if (!p.enabled) throw std::invalid_argument("hebbian_update: plasticity not enabled");
  Matrix& w = state.w_ba_current;
  if (w.rows() != r_b_now.size() || w.cols() != r_a_prev.size())
    throw std::invalid_argument("hebbian_update: rate vector shapes do not match w_ba");
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double post = r_b_now[i];
    for (std::size_t j = 0; j < w.cols(); ++j) {
      const double dw = p.eta * post * r_a_prev[j] - p.lambda_decay * w(i, j);
      w(i, j) = std::clamp(w(i, j) + dw, -p.w_clip, p.w_clip);
    }
  }
}

BrainState hebbian_update(const BrainState& state, const PlasticityParams& p,
                          const Vector& r_a_prev, const Vector& r_b_now) {
  BrainState next = state;
  hebbian_update_inplace(next, p, r_a_prev, r_b_now);
  return next;
}

Vec2 task_intent(const TaskSpec& task, const Vec2& hand_pos) {
  Vec2 d{task.target_pos[0] - hand_pos[0], task.target_pos[1] - hand_pos[1]};
  const double norm = std::hypot(d[0], d[1]);
  if (norm > 1.0) {
    d[0] /= norm;
    d[1] /= norm;
  }
  return d;
}

std::pair<Trajectory, BrainState> run_trial(const BrainConfig& cfg, const BrainState& state,
                                            const TaskSpec& task, const StimPolicy& policy,
                                            const PlasticityParams& plasticity) {
  cfg.validate();
  require(task.duration_ms > 0, "run_trial: duration must be positive");
  const double bins_f = task.duration_ms / cfg.dt_ms;
  const std::size_t bins = static_cast<std::size_t>(std::llround(bins_f));
  require(std::abs(bins_f - static_cast<double>(bins)) < 1e-9,
          "run_trial: duration_ms must be a multiple of dt_ms");

  BrainState st = state;
  Trajectory traj;
  traj.reserve(bins);

  // Initial observation so the policy has something to act on at bin 0.
  Vector observed(cfg.n_a);
  for (std::size_t i = 0; i < cfg.n_a; ++i)
    observed[i] = std::clamp(st.r_a[i] + cfg.obs_noise_std * st.rng.gaussian(), 0.0, cfg.rate_max);

  for (std::size_t b = 0; b < bins; ++b) {
    Vector stim = policy(observed);
    if (stim.size() != cfg.n_b)
      throw std::invalid_argument("run_trial: policy returned " + std::to_string(stim.size()) +
                                  " channels, region B has " + std::to_string(cfg.n_b));
    const Vector r_a_prev = st.r_a;
    StepInputs in;
    in.intent = task_intent(task, st.hand_pos);
    in.stim_drive = &stim;
    observed = step(cfg, st, in);
    if (plasticity.enabled) hebbian_update_inplace(st, plasticity, r_a_prev, st.r_b);
    traj.push_back({static_cast<double>(b + 1) * cfg.dt_ms, st.hand_pos, st.hand_vel});
  }
  return {std::move(traj), std::move(st)};
}

Vec2 probe_units(const BrainConfig& cfg, const BrainState& state, Region region,
                 const std::vector<std::size_t>& units, double probe_amplitude,
                 std::size_t n_bins) {
  cfg.validate();
  require(probe_amplitude > 0, "probe: amplitude must be positive");
  const std::size_t limit = region == Region::A ? cfg.n_a : cfg.n_b;
  for (std::size_t u : units)
    require(u < limit, "probe: unit index " + std::to_string(u) + " out of range");

  BrainState st = state;  // keeps the plastic weights; activity starts from rest
  st.r_a.assign(cfg.n_a, 0.0);
  st.r_b.assign(cfg.n_b, 0.0);
  st.hand_pos = {0.0, 0.0};
  st.hand_vel = {0.0, 0.0};

  Vector drive(limit, 0.0);
  for (std::size_t u : units) drive[u] = probe_amplitude;

  StepInputs in;
  in.noise_enabled = false;
  if (region == Region::A)
    in.extra_a = &drive;
  else
    in.extra_b = &drive;

  for (std::size_t b = 0; b < n_bins; ++b) step(cfg, st, in);
  return st.hand_pos;
}

Vec2 probe_site(const BrainConfig& cfg, const BrainState& state, Region region,
                std::size_t unit_index, double probe_amplitude, std::size_t n_bins) {
  return probe_units(cfg, state, region, {unit_index}, probe_amplitude, n_bins);
}

Checkpoint state_to_checkpoint(const BrainState& state) {
  Checkpoint ckpt;
  Matrix ra(1, state.r_a.size()), rb(1, state.r_b.size());
  for (std::size_t i = 0; i < state.r_a.size(); ++i) ra(0, i) = state.r_a[i];
  for (std::size_t i = 0; i < state.r_b.size(); ++i) rb(0, i) = state.r_b[i];
  ckpt.add("brain.r_a", "rates", ra);
  ckpt.add("brain.r_b", "rates", rb);
  ckpt.add("brain.w_ba", "pathway", state.w_ba_current);
  Matrix kin(1, 4);
  kin(0, 0) = state.hand_pos[0];
  kin(0, 1) = state.hand_pos[1];
  kin(0, 2) = state.hand_vel[0];
  kin(0, 3) = state.hand_vel[1];
  ckpt.add("brain.kinematics", "pos_vel", kin);
  // RNG state is a 64-bit word; doubles hold 53 bits, so split it.
  Matrix rng2(1, 2);
  rng2(0, 0) = static_cast<double>(state.rng.raw_state() >> 32);
  rng2(0, 1) = static_cast<double>(state.rng.raw_state() & 0xffffffffULL);
  ckpt.add("brain.rng", "rng_state", rng2);
  return ckpt;
}

BrainState state_from_checkpoint(const Checkpoint& ckpt) {
  BrainState st;
  st.r_a = ckpt.at("brain.r_a").value.row(0);
  st.r_b = ckpt.at("brain.r_b").value.row(0);
  st.w_ba_current = ckpt.at("brain.w_ba").value;
  const Matrix& kin = ckpt.at("brain.kinematics").value;
  st.hand_pos = {kin(0, 0), kin(0, 1)};
  st.hand_vel = {kin(0, 2), kin(0, 3)};
  const Matrix& rng2 = ckpt.at("brain.rng").value;
  st.rng.set_raw_state((static_cast<std::uint64_t>(rng2(0, 0)) << 32) |
                       static_cast<std::uint64_t>(rng2(0, 1)));
  return st;
}

BrainConfig make_default_brain(const BrainGenSpec& spec) {
  BrainConfig cfg;
  cfg.n_a = spec.n_a;
  cfg.n_b = spec.n_b;
  cfg.dt_ms = spec.dt_ms;
  cfg.tau_ms = spec.tau_ms;
  cfg.noise_std = spec.noise_std;
  cfg.obs_noise_std = spec.obs_noise_std;
  cfg.stim_coupling = spec.stim_coupling;
  cfg.rate_max = spec.rate_max;
  cfg.w_aa = Matrix(spec.n_a, spec.n_a);
  cfg.w_bb = Matrix(spec.n_b, spec.n_b);

  const double two_pi = 6.283185307179586476925286766559;
  cfg.intent_proj = Matrix(spec.n_a, 2);
  for (std::size_t i = 0; i < spec.n_a; ++i) {
    const double phi = two_pi * static_cast<double>(i) / static_cast<double>(spec.n_a);
    cfg.intent_proj(i, 0) = spec.intent_gain * std::cos(phi);
    cfg.intent_proj(i, 1) = spec.intent_gain * std::sin(phi);
  }

  cfg.readout_g = Matrix(2, spec.n_b);
  for (std::size_t j = 0; j < spec.n_b; ++j) {
    const double psi = two_pi * static_cast<double>(j) / static_cast<double>(spec.n_b);
    cfg.readout_g(0, j) = spec.readout_gain * std::cos(psi);
    cfg.readout_g(1, j) = spec.readout_gain * std::sin(psi);
  }

  // Cosine-structured pathway: A units at angle phi excite B units at the
  // same preferred angle, so the intact brain reaches toward the intent.
  cfg.w_ba = Matrix(spec.n_b, spec.n_a);
  Rng rng(spec.weight_seed);
  for (std::size_t j = 0; j < spec.n_b; ++j) {
    const double psi = two_pi * static_cast<double>(j) / static_cast<double>(spec.n_b);
    for (std::size_t i = 0; i < spec.n_a; ++i) {
      const double phi = two_pi * static_cast<double>(i) / static_cast<double>(spec.n_a);
      const double tuning = std::max(0.0, std::cos(psi - phi));
      const double jitter = 1.0 + 0.1 * rng.uniform(-1.0, 1.0);
      cfg.w_ba(j, i) = spec.pathway_gain / static_cast<double>(spec.n_a) * tuning * jitter;
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace bbci::brainsim
