#include "bbci/plasticity/conditioning.hpp"

#include <algorithm>
#include <cmath>

namespace bbci::plasticity {

namespace {

using brainsim::Region;
using brainsim::StepInputs;

struct BurstState {
  std::vector<std::size_t> remaining;  // bins left in each unit's burst
};

Vector background_bin(const BackgroundDrive& bg, BurstState& bs, Rng& rng, std::size_t n_a) {
  Vector drive(n_a, 0.0);
  for (std::size_t i = 0; i < n_a; ++i) {
    if (bs.remaining[i] == 0 && rng.uniform() < bg.burst_prob) bs.remaining[i] = bg.burst_bins;
    if (bs.remaining[i] > 0) {
      drive[i] = bg.burst_amp_hz;
      bs.remaining[i] -= 1;
    }
  }
  return drive;
}

// Detection happens at the end of a bin, so the earliest deliverable
// stimulation is the next bin; 7.5 ms on a 10 ms grid quantizes to 1 bin.
std::size_t quantized_delay_bins(double delay_ms, double dt_ms) {
  const auto bins = static_cast<std::size_t>(std::ceil(delay_ms / dt_ms - 1e-9));
  return std::max<std::size_t>(1, bins);
}

// One conditioning pass. When `scheduled` is null, stimulation follows
// detections (delay_bins after each upward crossing); otherwise it is
// delivered exactly at the scheduled bins. Detected-and-delivered bins
// are returned either way. Region-A dynamics never depend on the
// stimulation (B does not project back), so the detection sequence is
// identical across both modes for the same seeds.
std::vector<std::size_t> run_pass(const BrainConfig& cfg, BrainState& st,
                                  const ConditioningProtocol& proto,
                                  const PlasticityParams& plasticity,
                                  const BackgroundDrive& bg, bool deliver_stim,
                                  const std::vector<std::size_t>* scheduled) {
  const std::size_t delay_bins = quantized_delay_bins(proto.delay_ms, cfg.dt_ms);
  Rng bg_rng(bg.seed);
  BurstState bursts{std::vector<std::size_t>(cfg.n_a, 0)};

  std::vector<std::size_t> delivered;
  std::vector<bool> stim_at(proto.session_bins, false);
  if (scheduled)
    for (std::size_t b : *scheduled)
      if (b < proto.session_bins) stim_at[b] = true;

  Vector stim(cfg.n_b, 0.0);
  double prev_source_rate = st.r_a[proto.source_unit];
  std::size_t sched_idx = 0;
  std::vector<std::size_t> pending;  // triggered-mode delivery bins

  for (std::size_t b = 0; b < proto.session_bins; ++b) {
    bool stim_now = false;
    if (scheduled) {
      stim_now = stim_at[b];
    } else {
      while (sched_idx < pending.size() && pending[sched_idx] < b) ++sched_idx;
      stim_now = sched_idx < pending.size() && pending[sched_idx] == b;
    }

    std::fill(stim.begin(), stim.end(), 0.0);
    if (stim_now && deliver_stim)
      for (std::size_t u : proto.target_units) stim[u] = proto.stim_amplitude;
    if (stim_now) delivered.push_back(b);

    const Vector bg_drive = background_bin(bg, bursts, bg_rng, cfg.n_a);
    const Vector r_a_prev = st.r_a;
    StepInputs in;
    in.stim_drive = &stim;
    in.extra_a = &bg_drive;
    brainsim::step(cfg, st, in);
    if (plasticity.enabled) brainsim::hebbian_update_inplace(st, plasticity, r_a_prev, st.r_b);

    const double rate = st.r_a[proto.source_unit];
    if (!scheduled && prev_source_rate < proto.detect_threshold_hz &&
        rate >= proto.detect_threshold_hz) {
      const std::size_t when = b + delay_bins;
      if (when < proto.session_bins &&
          (pending.empty() || when > pending.back()))  // collapse same-bin collisions
        pending.push_back(when);
    }
    prev_source_rate = rate;
  }
  return delivered;
}

}  // namespace

ConditioningResult run_conditioning(const BrainConfig& cfg, const BrainState& state,
                                    const ConditioningProtocol& protocol,
                                    const PlasticityParams& plasticity,
                                    const BackgroundDrive& background) {
  cfg.validate();
  require(plasticity.enabled, "run_conditioning: plasticity must be enabled");
  require(protocol.source_unit < cfg.n_a, "run_conditioning: source unit out of range");
  require(!protocol.target_units.empty(), "run_conditioning: no target units");
  for (std::size_t u : protocol.target_units)
    require(u < cfg.n_b, "run_conditioning: target unit " + std::to_string(u) + " out of range");
  require(protocol.detect_threshold_hz > 0, "run_conditioning: threshold must be positive");
  require(protocol.delay_ms >= 0, "run_conditioning: delay must be >= 0");
  require(protocol.session_bins > 0, "run_conditioning: session must have bins");

  if (protocol.control_mode == ConditioningProtocol::ControlMode::none) {
    BrainState st = state;
    const auto delivered = run_pass(cfg, st, protocol, plasticity, background, true, nullptr);
    return {std::move(st), delivered.size()};
  }

  // Shuffled-timing control: first find how many stimulation events the
  // triggered protocol would deliver (stimulation does not feed back into
  // region A, so a stim-free pass detects the identical events), then
  // deliver that many at seeded-random bins.
  std::size_t n_events = 0;
  {
    BrainState probe = state;
    n_events = run_pass(cfg, probe, protocol, plasticity, background, false, nullptr).size();
  }
  std::vector<std::size_t> bins;
  Rng shuffle_rng = Rng(background.seed).fork(0x5u);
  std::vector<bool> used(protocol.session_bins, false);
  while (bins.size() < n_events) {
    const std::size_t b = static_cast<std::size_t>(shuffle_rng.below(protocol.session_bins));
    if (!used[b]) {
      used[b] = true;
      bins.push_back(b);
    }
  }
  std::sort(bins.begin(), bins.end());

  BrainState st = state;
  const auto delivered = run_pass(cfg, st, protocol, plasticity, background, true, &bins);
  return {std::move(st), delivered.size()};
}

namespace {

Vec2 normalize_or_zero(const Vec2& v, double floor, bool* zeroed) {
  const double n = std::hypot(v[0], v[1]);
  if (n < floor) {
    if (zeroed) *zeroed = true;
    return {0.0, 0.0};
  }
  return {v[0] / n, v[1] / n};
}

double cosine(const Vec2& a, const Vec2& b) {
  return a[0] * b[0] + a[1] * b[1];  // unit (or zero) vectors
}

}  // namespace

ShiftReport measure_shift(const BrainConfig& cfg, const BrainState& state_pre,
                          const BrainState& state_post, const ConditioningProtocol& protocol,
                          std::size_t stim_count) {
  require(state_pre.r_a.size() == state_post.r_a.size() &&
              state_pre.r_b.size() == state_post.r_b.size(),
          "measure_shift: states have different shapes");
  constexpr double kFloor = 1e-9;
  constexpr std::size_t kProbeBins = 20;
  const double amp = 60.0;

  ShiftReport rep;
  rep.stim_count = stim_count;
  const Vec2 pre = brainsim::probe_site(cfg, state_pre, Region::A, protocol.source_unit, amp,
                                        kProbeBins);
  const Vec2 post = brainsim::probe_site(cfg, state_post, Region::A, protocol.source_unit, amp,
                                         kProbeBins);
  const Vec2 tgt = brainsim::probe_units(cfg, state_pre, Region::B, protocol.target_units, amp,
                                         kProbeBins);
  rep.pre_direction = normalize_or_zero(pre, kFloor, &rep.zero_response);
  rep.post_direction = normalize_or_zero(post, kFloor, &rep.zero_response);
  rep.target_direction = normalize_or_zero(tgt, kFloor, &rep.zero_response);
  rep.cosine_gain = cosine(rep.post_direction, rep.target_direction) -
                    cosine(rep.pre_direction, rep.target_direction);
  return rep;
}

}  // namespace bbci::plasticity
