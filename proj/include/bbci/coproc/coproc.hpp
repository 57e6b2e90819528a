#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bbci/brainsim/brain.hpp"
#include "bbci/diffnet/gradcheck.hpp"
#include "bbci/diffnet/net.hpp"
#include "bbci/diffnet/optim.hpp"

namespace bbci::coproc {

using brainsim::BrainConfig;
using brainsim::BrainState;
using brainsim::TaskSpec;
using brainsim::Trajectory;
using brainsim::Vec2;
using diffnet::GradSet;
using diffnet::NetParams;
using diffnet::OptState;

// One trial of emulator training data: the stimulation sequence actually
// delivered, the rates observed at trial start (the context), and the
// behavior it produced.
struct EmulatorRecord {
  Vector context;                  // observed region-A rates at trial start
  std::vector<Vector> stim;        // per-bin drive, entries in [0, s_max]
  Trajectory behavior;
  bool validation = false;
};

struct EmulatorDataset {
  std::vector<EmulatorRecord> records;
  double s_max = 5.0;
  std::size_t stim_channels() const {
    return records.empty() ? 0 : records.front().stim.front().size();
  }
};

// Bounded open-loop stimulation sampler: a mix of smoothed seeded noise
// and single-channel amplitude sweeps, so every channel is exercised.
struct StimSamplerSpec {
  double s_max = 5.0;
  double smooth = 0.8;          // one-pole smoothing of the noise trials
  double sweep_fraction = 0.3;  // fraction of trials that are sweeps
};

EmulatorDataset sample_stim_dataset(const BrainConfig& cfg, std::uint64_t brain_seed,
                                    std::size_t n_trials, std::size_t trial_bins,
                                    const StimSamplerSpec& sampler,
                                    double validation_fraction = 0.2);

// Behavioral error terms. total = alpha * terminal + beta * path +
// gamma * stimulation energy.
struct LossWeights {
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 1e-3;
};

struct LossValue {
  double total = 0.0;
  double terminal_term = 0.0;
  double path_term = 0.0;
  double stim_energy_term = 0.0;
};

// The trained pair: the co-processor (observed rates -> stimulation) and
// the emulator (stimulation + context -> predicted hand position), plus
// the content digest that pins the emulator after training.
struct CoprocModel {
  NetParams ncp;
  NetParams en;
  std::string en_digest;
  double s_max = 5.0;
  double rate_max = 100.0;

  void refresh_en_digest();
  bool en_digest_intact() const;
};

// Default desk-scale architectures (the framework leaves depth/width
// open; these are configuration, not mandated values).
NetParams default_en(std::size_t n_b, std::size_t n_a, std::size_t hidden, std::uint64_t seed);
NetParams default_ncp(std::size_t n_a, std::size_t n_b, std::size_t hidden, double s_max,
                      std::uint64_t seed, std::size_t extra_inputs = 0);

// Input conventions shared by training and evaluation: stimulation is
// scaled by 1/s_max and rates by 1/rate_max before entering a network.
std::vector<Vector> en_inputs(const std::vector<Vector>& stim, const Vector& context,
                              double s_max, double rate_max);

struct EpochStats {
  std::size_t epoch;
  double train_loss;
  double validation_loss;
};

struct EmulatorTrainResult {
  NetParams en;
  std::vector<EpochStats> history;
};

// Full-batch Adam on mean squared trajectory error. Per-trial gradients
// are independent, so the inner loop parallelizes across trials and is
// reduced in trial order (bit-identical for any thread count).
EmulatorTrainResult train_emulator(const EmulatorDataset& dataset, NetParams en_init,
                                   std::size_t epochs, OptState opt);

double emulator_validation_r2(const NetParams& en, const EmulatorDataset& dataset,
                              double rate_max);

// Forward/backward through the concatenated co-processor -> emulator
// stack. The emulator's gradients are computed as part of the chain but
// its parameters are never touched.
struct StackEval {
  std::vector<Vector> stim;       // co-processor outputs (drive units)
  std::vector<Vector> predicted;  // emulator position predictions
  LossValue loss;
};

StackEval stack_forward(const CoprocModel& model, const std::vector<Vector>& observed,
                        const Vector& context, const Vec2& target, const LossWeights& weights);

GradSet stack_ncp_gradients(const CoprocModel& model, const std::vector<Vector>& observed,
                            const Vector& context, const Vec2& target,
                            const LossWeights& weights, LossValue* loss_out = nullptr);

// Central-difference verification of the frozen-emulator gradient path.
double stack_grad_check(const CoprocModel& model, const std::vector<Vector>& observed,
                        const Vector& context, const Vec2& target, const LossWeights& weights);

struct SessionStats {
  std::size_t session;
  double total;
  double terminal;
  double path;
  double energy;
};

struct NcpTrainOptions {
  LossWeights weights;
  std::uint64_t brain_seed = 11;
  std::size_t steps_per_session = 4;  // optimizer steps on each on-policy batch
};

struct NcpTrainResult {
  CoprocModel model;
  std::vector<SessionStats> history;
};

// On-policy training: each session rolls the current co-processor in
// closed loop on the simulated brain (one trial per task), then steps the
// co-processor on gradients backpropagated through the frozen emulator.
NcpTrainResult train_ncp(const CoprocModel& model, const BrainConfig& cfg,
                         const std::vector<TaskSpec>& tasks, std::size_t sessions,
                         OptState opt, const NcpTrainOptions& opts = {});

enum class PolicyMode { ncp, zero_stim, random_stim };

std::string to_string(PolicyMode m);

struct EvalOptions {
  double random_energy = 1.0;  // per-bin mean squared-norm target for random_stim
};

struct EvalMetrics {
  double mean_terminal_distance = 0.0;
  double success_rate = 0.0;
  double mean_stim_energy = 0.0;  // mean over bins of squared stim norm
  std::vector<double> per_task_terminal;
};

// Runs each task on the actual simulated brain (never the emulator) with
// the chosen policy; deterministic per seed.
EvalMetrics closed_loop_eval(const CoprocModel& model, const BrainConfig& cfg,
                             std::uint64_t brain_seed, const std::vector<TaskSpec>& tasks,
                             PolicyMode mode, const EvalOptions& opts = {});

struct CoadaptReport {
  EvalMetrics pre_zero_stim;   // lesioned baseline, co-processor removed
  EvalMetrics post_zero_stim;  // after the sessions, co-processor removed
  double weight_change_norm = 0.0;
  std::size_t sessions = 0;
};

// Closed-loop co-processor use with Hebbian plasticity active in the
// brain; reports how the brain performs on its own before and after.
std::pair<BrainState, CoadaptReport> coadaptation_session(
    const CoprocModel& model, const BrainConfig& cfg, const BrainState& state,
    const brainsim::PlasticityParams& plasticity, const std::vector<TaskSpec>& tasks,
    std::size_t sessions, std::uint64_t eval_seed = 101);

std::vector<TaskSpec> radial_tasks(std::size_t count, double radius, double duration_ms,
                                   double success_radius);

// Model bundle in the shared checkpoint container. Loading with
// include_en = false leaves the emulator out entirely, which is how
// evaluation-only runs prove they never consult it.
Checkpoint to_checkpoint(const CoprocModel& model);
CoprocModel coproc_from_checkpoint(const Checkpoint& ckpt, bool include_en = true);

}  // namespace bbci::coproc
