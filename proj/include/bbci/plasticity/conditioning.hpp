#pragma once

#include "bbci/brainsim/brain.hpp"

namespace bbci::plasticity {

using brainsim::BrainConfig;
using brainsim::BrainState;
using brainsim::PlasticityParams;
using brainsim::Vec2;

// Spike-triggered conditioning over the rate substrate: an "event" at the
// source unit is an upward crossing of detect_threshold_hz, and the
// stimulation pulse lands on the target units delay_ms later (quantized
// to the next bin boundary).
struct ConditioningProtocol {
  std::size_t source_unit = 0;
  std::vector<std::size_t> target_units;
  double delay_ms = 7.5;
  double detect_threshold_hz = 50.0;
  double stim_amplitude = 4.0;  // drive units on the stimulation path
  std::size_t session_bins = 3000;
  enum class ControlMode { none, shuffled_timing } control_mode = ControlMode::none;
};

// Bursty seeded drive into region A: each unit independently starts a
// burst of burst_bins bins with probability burst_prob per bin, during
// which it receives burst_amp_hz of input drive.
struct BackgroundDrive {
  double burst_prob = 0.004;
  double burst_amp_hz = 400.0;
  std::size_t burst_bins = 6;
  std::uint64_t seed = 7;
};

struct ConditioningResult {
  BrainState state;
  std::size_t stim_count;
};

// Runs session_bins of background-driven activity with Hebbian plasticity
// on, stimulating the targets after each detected source event. In
// shuffled_timing mode the same number of stimulation events is delivered
// at seeded-random bins (a dose-matched control).
ConditioningResult run_conditioning(const BrainConfig& cfg, const BrainState& state,
                                    const ConditioningProtocol& protocol,
                                    const PlasticityParams& plasticity,
                                    const BackgroundDrive& background);

// Output-direction shift of the source site, measured by probing before
// and after conditioning with noise disabled. cosine_gain is
// cos(post, target) - cos(pre, target) where target is the probe
// direction of the stimulated unit set.
struct ShiftReport {
  Vec2 pre_direction{0.0, 0.0};
  Vec2 post_direction{0.0, 0.0};
  Vec2 target_direction{0.0, 0.0};
  double cosine_gain = 0.0;
  std::size_t stim_count = 0;
  bool zero_response = false;  // probe displacement below the floor
};

ShiftReport measure_shift(const BrainConfig& cfg, const BrainState& state_pre,
                          const BrainState& state_post, const ConditioningProtocol& protocol,
                          std::size_t stim_count = 0);

}  // namespace bbci::plasticity
