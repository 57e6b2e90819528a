#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "bbci/core/checkpoint.hpp"
#include "bbci/core/matrix.hpp"
#include "bbci/core/rng.hpp"

namespace bbci::brainsim {

using Vec2 = std::array<double, 2>;

// Two-region rate network: intent region A drives execution region B
// through the plastic (and lesionable) pathway w_ba; region B drives a 2D
// effector through readout_g. Stimulation enters region B.
struct BrainConfig {
  std::size_t n_a = 16;
  std::size_t n_b = 16;
  double dt_ms = 10.0;
  double tau_ms = 50.0;
  Matrix w_aa;          // n_a x n_a
  Matrix w_bb;          // n_b x n_b
  Matrix w_ba;          // n_b x n_a, the plastic pathway
  Matrix intent_proj;   // n_a x 2
  Matrix readout_g;     // 2 x n_b
  double noise_std = 1.0;      // per-bin process noise (Hz)
  double obs_noise_std = 0.5;  // recording noise on observed region-A rates (Hz)
  double stim_coupling = 20.0; // drive units -> Hz of region-B input
  double rate_max = 100.0;

  void validate() const;
};

struct PlasticityParams {
  double eta = 0.0;
  double lambda_decay = 0.0;
  double w_clip = 0.5;
  bool enabled = false;
};

struct BrainState {
  Vector r_a;
  Vector r_b;
  Matrix w_ba_current;
  Rng rng{0};
  Vec2 hand_pos{0.0, 0.0};
  Vec2 hand_vel{0.0, 0.0};
};

BrainState make_initial_state(const BrainConfig& cfg, std::uint64_t seed);

struct TrajectoryPoint {
  double t_ms;
  Vec2 pos;
  Vec2 vel;
};
using Trajectory = std::vector<TrajectoryPoint>;

struct TaskSpec {
  Vec2 target_pos{0.0, 0.0};
  double duration_ms = 1500.0;
  double success_radius = 0.5;
};

// Extended step inputs used by the protocol code: direct per-unit drive
// injections and a noise switch, on top of the public intent/stim pair.
struct StepInputs {
  Vec2 intent{0.0, 0.0};
  const Vector* stim_drive = nullptr;  // length n_b, entries >= 0
  const Vector* extra_a = nullptr;     // direct drive into region A
  const Vector* extra_b = nullptr;     // direct drive into region B
  bool noise_enabled = true;
};

// In-place engine step; returns the observed (noise-corrupted) region-A
// rates. One fixed RNG draw order per bin: A process noise, B process
// noise, observation noise — so the stream never depends on the inputs.
Vector step(const BrainConfig& cfg, BrainState& state, const StepInputs& in);

// Functional step over the public surface.
std::pair<BrainState, Vector> brain_step(const BrainConfig& cfg, const BrainState& state,
                                         const Vec2& intent, const Vector& stim_drive);

// Returns a copy of cfg with round(fraction * entries) of w_ba zeroed,
// chosen by seeded shuffle.
BrainConfig apply_lesion(const BrainConfig& cfg, double fraction, std::uint64_t seed);

// dw[i,j] = eta * r_b_now[i] * r_a_prev[j] - lambda * w[i,j], clipped to
// +-w_clip. Uses the previous-bin presynaptic rate, so potentiation is
// causal (pre before post).
void hebbian_update_inplace(BrainState& state, const PlasticityParams& p,
                            const Vector& r_a_prev, const Vector& r_b_now);
BrainState hebbian_update(const BrainState& state, const PlasticityParams& p,
                          const Vector& r_a_prev, const Vector& r_b_now);

using StimPolicy = std::function<Vector(const Vector& observed)>;

// Closed-loop trial: intent each bin points from the hand to the target
// (norm-clipped to 1), the policy maps observed region-A rates to the
// stimulation drive, plasticity runs when enabled.
std::pair<Trajectory, BrainState> run_trial(const BrainConfig& cfg, const BrainState& state,
                                            const TaskSpec& task, const StimPolicy& policy,
                                            const PlasticityParams& plasticity);

enum class Region { A, B };

// Net hand displacement from rest when only the probed units are driven,
// noise disabled. Measures the output direction of a site.
Vec2 probe_units(const BrainConfig& cfg, const BrainState& state, Region region,
                 const std::vector<std::size_t>& units, double probe_amplitude,
                 std::size_t n_bins);
Vec2 probe_site(const BrainConfig& cfg, const BrainState& state, Region region,
                std::size_t unit_index, double probe_amplitude, std::size_t n_bins);

Vec2 task_intent(const TaskSpec& task, const Vec2& hand_pos);

// Checkpoint adapters for brain state snapshots.
Checkpoint state_to_checkpoint(const BrainState& state);
BrainState state_from_checkpoint(const Checkpoint& ckpt);

// Default desk-scale construction: cosine-tuned intent projection and
// readout spread around the circle, cosine-structured A->B pathway so the
// intact brain performs the reach task.
struct BrainGenSpec {
  std::size_t n_a = 16;
  std::size_t n_b = 16;
  double dt_ms = 10.0;
  double tau_ms = 50.0;
  double noise_std = 1.0;
  double obs_noise_std = 0.5;
  double stim_coupling = 20.0;
  double rate_max = 100.0;
  double intent_gain = 120.0;   // drive for a unit-norm intent
  double readout_gain = 0.004;  // Hz -> units/s per aligned channel
  double pathway_gain = 4.0;    // strength of the cosine-structured w_ba
  std::uint64_t weight_seed = 1;
};

BrainConfig make_default_brain(const BrainGenSpec& spec);

}  // namespace bbci::brainsim
