#include <cmath>

#include "bbci/coproc/coproc.hpp"
#include "bbci/core/kernels.hpp"

namespace bbci::coproc {

using diffnet::net_forward;

namespace {

double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

struct TrialOutcome {
  double terminal_distance;
  double stim_energy;  // mean over bins of squared stim norm
  BrainState final_state;
};

TrialOutcome run_eval_trial(const CoprocModel& model, const BrainConfig& cfg,
                            const TaskSpec& task, PolicyMode mode, std::uint64_t trial_seed,
                            const EvalOptions& opts, const BrainState* start_state,
                            const brainsim::PlasticityParams& plasticity) {
  BrainState st = start_state ? *start_state : brainsim::make_initial_state(cfg, trial_seed);
  if (start_state) st.rng = Rng(trial_seed);  // same stream across policy modes

  diffnet::NetState ncp_state = diffnet::zero_state(model.ncp);
  // Separate stream so policy draws never disturb the brain's stream.
  Rng policy_rng = Rng(trial_seed).fork(0xEu);
  double energy = 0.0;
  std::size_t bins = 0;

  brainsim::StimPolicy policy = [&](const Vector& observed) -> Vector {
    Vector stim(cfg.n_b, 0.0);
    switch (mode) {
      case PolicyMode::zero_stim:
        break;
      case PolicyMode::random_stim: {
        // uniform [0, a] with E[s^2] = a^2/3 per channel
        const double a = std::sqrt(3.0 * opts.random_energy / static_cast<double>(cfg.n_b));
        for (auto& s : stim) s = std::min(policy_rng.uniform(0.0, a), model.s_max);
        break;
      }
      case PolicyMode::ncp: {
        Vector x(observed.size());
        for (std::size_t i = 0; i < observed.size(); ++i) x[i] = observed[i] / model.rate_max;
        auto fwd = net_forward(model.ncp, {x}, &ncp_state);
        ncp_state = std::move(fwd.final_state);
        stim = std::move(fwd.outputs[0]);
        break;
      }
    }
    energy += kernels::sum_squares(stim);
    bins += 1;
    return stim;
  };

  auto [traj, final_state] = brainsim::run_trial(cfg, st, task, policy, plasticity);
  TrialOutcome out;
  out.terminal_distance = distance(traj.back().pos, task.target_pos);
  out.stim_energy = bins > 0 ? energy / static_cast<double>(bins) : 0.0;
  out.final_state = std::move(final_state);
  return out;
}

}  // namespace

EvalMetrics closed_loop_eval(const CoprocModel& model, const BrainConfig& cfg,
                             std::uint64_t brain_seed, const std::vector<TaskSpec>& tasks,
                             PolicyMode mode, const EvalOptions& opts) {
  cfg.validate();
  require(!tasks.empty(), "closed_loop_eval: no tasks");
  brainsim::PlasticityParams off;
  EvalMetrics m;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const TrialOutcome out = run_eval_trial(model, cfg, tasks[k], mode,
                                            Rng(brain_seed).fork(k).next(), opts, nullptr, off);
    m.per_task_terminal.push_back(out.terminal_distance);
    m.mean_terminal_distance += out.terminal_distance / static_cast<double>(tasks.size());
    m.mean_stim_energy += out.stim_energy / static_cast<double>(tasks.size());
    if (out.terminal_distance <= tasks[k].success_radius)
      m.success_rate += 1.0 / static_cast<double>(tasks.size());
  }
  return m;
}

std::pair<BrainState, CoadaptReport> coadaptation_session(
    const CoprocModel& model, const BrainConfig& cfg, const BrainState& state,
    const brainsim::PlasticityParams& plasticity, const std::vector<TaskSpec>& tasks,
    std::size_t sessions, std::uint64_t eval_seed) {
  cfg.validate();
  require(plasticity.enabled, "coadaptation_session: plasticity must be enabled");
  require(!tasks.empty(), "coadaptation_session: no tasks");

  CoadaptReport rep;
  rep.sessions = sessions;

  // Zero-stim baselines run against the brain as configured by `state`'s
  // plastic weights; evaluation itself never adapts.
  BrainConfig pre_cfg = cfg;
  pre_cfg.w_ba = state.w_ba_current;
  rep.pre_zero_stim = closed_loop_eval(model, pre_cfg, eval_seed, tasks, PolicyMode::zero_stim);

  BrainState st = state;
  const Matrix w_before = st.w_ba_current;
  for (std::size_t session = 0; session < sessions; ++session) {
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const std::uint64_t seed = Rng(eval_seed).fork(1 + session * tasks.size() + k).next();
      const TrialOutcome out =
          run_eval_trial(model, cfg, tasks[k], PolicyMode::ncp, seed, {}, &st, plasticity);
      // carry the adapted pathway forward; activity restarts per trial
      BrainState next = brainsim::make_initial_state(cfg, 0);
      next.w_ba_current = out.final_state.w_ba_current;
      st = std::move(next);
    }
  }

  double norm = 0.0;
  for (std::size_t i = 0; i < w_before.size(); ++i) {
    const double d = st.w_ba_current.data()[i] - w_before.data()[i];
    norm += d * d;
  }
  rep.weight_change_norm = std::sqrt(norm);

  BrainConfig post_cfg = cfg;
  post_cfg.w_ba = st.w_ba_current;
  rep.post_zero_stim = closed_loop_eval(model, post_cfg, eval_seed, tasks, PolicyMode::zero_stim);
  return {std::move(st), std::move(rep)};
}

}  // namespace bbci::coproc
