#include <cmath>
#include <cstdio>

#include "bbci/coproc/coproc.hpp"
#include "bbci/core/kernels.hpp"

namespace bbci::coproc {

using diffnet::net_backward;
using diffnet::net_forward;

namespace {

std::vector<Vector> scaled_rates(const std::vector<Vector>& observed, double rate_max) {
  std::vector<Vector> x(observed.size());
  for (std::size_t t = 0; t < observed.size(); ++t) {
    x[t].resize(observed[t].size());
    for (std::size_t i = 0; i < observed[t].size(); ++i) x[t][i] = observed[t][i] / rate_max;
  }
  return x;
}

LossValue loss_terms(const std::vector<Vector>& predicted, const std::vector<Vector>& stim,
                     const Vec2& target, const LossWeights& w) {
  LossValue lv;
  const std::size_t n = predicted.size();
  require(n > 0, "loss: empty trial");
  {
    const double dx = predicted[n - 1][0] - target[0];
    const double dy = predicted[n - 1][1] - target[1];
    lv.terminal_term = dx * dx + dy * dy;
  }
  for (std::size_t t = 0; t < n; ++t) {
    const double dx = predicted[t][0] - target[0];
    const double dy = predicted[t][1] - target[1];
    lv.path_term += (dx * dx + dy * dy) / static_cast<double>(n);
  }
  for (std::size_t t = 0; t < n; ++t)
    lv.stim_energy_term += kernels::sum_squares(stim[t]) / static_cast<double>(n);
  lv.total = w.alpha * lv.terminal_term + w.beta * lv.path_term + w.gamma * lv.stim_energy_term;
  return lv;
}

// dLoss/d predicted_t for the terminal + path terms
std::vector<Vector> position_grads(const std::vector<Vector>& predicted, const Vec2& target,
                                   const LossWeights& w) {
  const std::size_t n = predicted.size();
  std::vector<Vector> g(n, Vector(2, 0.0));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < 2; ++i)
      g[t][i] = 2.0 * w.beta * (predicted[t][i] - target[i]) / static_cast<double>(n);
  for (std::size_t i = 0; i < 2; ++i)
    g[n - 1][i] += 2.0 * w.alpha * (predicted[n - 1][i] - target[i]);
  return g;
}

}  // namespace

StackEval stack_forward(const CoprocModel& model, const std::vector<Vector>& observed,
                        const Vector& context, const Vec2& target, const LossWeights& weights) {
  StackEval ev;
  const auto x = scaled_rates(observed, model.rate_max);
  ev.stim = net_forward(model.ncp, x).outputs;
  const auto inputs = en_inputs(ev.stim, context, model.s_max, model.rate_max);
  ev.predicted = net_forward(model.en, inputs).outputs;
  ev.loss = loss_terms(ev.predicted, ev.stim, target, weights);
  return ev;
}

GradSet stack_ncp_gradients(const CoprocModel& model, const std::vector<Vector>& observed,
                            const Vector& context, const Vec2& target,
                            const LossWeights& weights, LossValue* loss_out) {
  const auto x = scaled_rates(observed, model.rate_max);
  const auto ncp_fwd = net_forward(model.ncp, x);
  const std::vector<Vector>& stim = ncp_fwd.outputs;
  const auto inputs = en_inputs(stim, context, model.s_max, model.rate_max);
  const auto en_fwd = net_forward(model.en, inputs);
  if (loss_out) *loss_out = loss_terms(en_fwd.outputs, stim, target, weights);

  // Behavioral error backpropagated through the emulator; its parameter
  // gradients fall out of the same pass but are discarded untouched.
  const auto en_back =
      net_backward(model.en, inputs, nullptr, position_grads(en_fwd.outputs, target, weights));

  const std::size_t n = stim.size();
  const std::size_t n_stim = stim.front().size();
  std::vector<Vector> stim_grads(n, Vector(n_stim, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < n_stim; ++c) {
      // emulator path (inputs were stim / s_max) plus the energy term
      stim_grads[t][c] = en_back.input_grads[t][c] / model.s_max +
                         2.0 * weights.gamma * stim[t][c] / static_cast<double>(n);
    }
  }
  return net_backward(model.ncp, x, nullptr, stim_grads).grads;
}

double stack_grad_check(const CoprocModel& model, const std::vector<Vector>& observed,
                        const Vector& context, const Vec2& target, const LossWeights& weights) {
  const GradSet analytic = stack_ncp_gradients(model, observed, context, target, weights);
  CoprocModel probe = model;
  return diffnet::grad_check_against(
      model.ncp, analytic,
      [&](const NetParams& ncp) {
        probe.ncp = ncp;
        return stack_forward(probe, observed, context, target, weights).loss.total;
      });
}

std::string to_string(PolicyMode m) {
  switch (m) {
    case PolicyMode::ncp: return "ncp";
    case PolicyMode::zero_stim: return "zero_stim";
    case PolicyMode::random_stim: return "random_stim";
  }
  return "?";
}

namespace {

struct TrialRecord {
  std::vector<Vector> observed;
  Vector context;
  Vec2 target;
};

// Roll the co-processor in closed loop on the real brain, recording what
// it saw. The recorded observations replay as fixed inputs for the
// gradient pass.
TrialRecord collect_trial(const CoprocModel& model, const BrainConfig& cfg,
                          const TaskSpec& task, std::uint64_t trial_seed) {
  TrialRecord rec;
  rec.target = task.target_pos;
  BrainState st = brainsim::make_initial_state(cfg, trial_seed);

  diffnet::NetState ncp_state = diffnet::zero_state(model.ncp);
  brainsim::StimPolicy policy = [&](const Vector& observed) {
    rec.observed.push_back(observed);
    Vector x(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i) x[i] = observed[i] / model.rate_max;
    auto fwd = net_forward(model.ncp, {x}, &ncp_state);
    ncp_state = std::move(fwd.final_state);
    return fwd.outputs[0];
  };
  brainsim::PlasticityParams off;
  auto [traj, final_state] = brainsim::run_trial(cfg, st, task, policy, off);
  (void)traj;
  (void)final_state;
  rec.context = rec.observed.front();
  return rec;
}

}  // namespace

NcpTrainResult train_ncp(const CoprocModel& model, const BrainConfig& cfg,
                         const std::vector<TaskSpec>& tasks, std::size_t sessions,
                         OptState opt, const NcpTrainOptions& opts) {
  cfg.validate();
  require(!tasks.empty(), "train_ncp: no tasks");
  require(!model.en_digest.empty(), "train_ncp: emulator must be trained (digest missing)");
  require(model.en_digest_intact(), "train_ncp: emulator digest mismatch before training");

  NcpTrainResult res;
  res.model = model;

  for (std::size_t session = 0; session < sessions; ++session) {
    std::vector<TrialRecord> batch;
    batch.reserve(tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k)
      batch.push_back(collect_trial(res.model, cfg, tasks[k],
                                    Rng(opts.brain_seed).fork(session * tasks.size() + k).next()));

    SessionStats stats{session, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t step = 0; step < opts.steps_per_session; ++step) {
      GradSet total = diffnet::zero_grads(res.model.ncp);
      LossValue mean{};
      for (const TrialRecord& rec : batch) {
        LossValue lv;
        const GradSet g = stack_ncp_gradients(res.model, rec.observed, rec.context, rec.target,
                                              opts.weights, &lv);
        total.add_scaled(g, 1.0 / static_cast<double>(batch.size()));
        mean.total += lv.total / static_cast<double>(batch.size());
        mean.terminal_term += lv.terminal_term / static_cast<double>(batch.size());
        mean.path_term += lv.path_term / static_cast<double>(batch.size());
        mean.stim_energy_term += lv.stim_energy_term / static_cast<double>(batch.size());
      }
      auto [next, next_opt] = diffnet::opt_step(res.model.ncp, total, opt);
      res.model.ncp = std::move(next);
      opt = std::move(next_opt);
      if (step == 0)
        stats = {session, mean.total, mean.terminal_term, mean.path_term, mean.stim_energy_term};
    }
    res.history.push_back(stats);
  }

  if (!res.model.en_digest_intact())
    throw std::runtime_error(
        "train_ncp: frozen-emulator invariant violated (digest changed during training)");
  return res;
}

Checkpoint to_checkpoint(const CoprocModel& model) {
  Checkpoint ckpt;
  for (auto& a : diffnet::to_checkpoint(model.ncp, "ncp.").arrays) ckpt.arrays.push_back(a);
  for (auto& a : diffnet::to_checkpoint(model.en, "en.").arrays) ckpt.arrays.push_back(a);
  Matrix meta(1, 2);
  meta(0, 0) = model.s_max;
  meta(0, 1) = model.rate_max;
  ckpt.add("coproc.meta", "s_max_rate_max", meta);
  // the digest is 16 hex chars = 64 bits; split into two exact doubles
  require(model.en_digest.size() == 16, "coproc checkpoint: emulator digest missing");
  const std::uint64_t dg = std::stoull(model.en_digest, nullptr, 16);
  Matrix dgm(1, 2);
  dgm(0, 0) = static_cast<double>(dg >> 32);
  dgm(0, 1) = static_cast<double>(dg & 0xffffffffULL);
  ckpt.add("coproc.en_digest", "digest64", dgm);
  return ckpt;
}

CoprocModel coproc_from_checkpoint(const Checkpoint& ckpt, bool include_en) {
  CoprocModel model;
  model.ncp = diffnet::net_params_from_checkpoint(ckpt, "ncp.");
  if (include_en) model.en = diffnet::net_params_from_checkpoint(ckpt, "en.");
  const Matrix& meta = ckpt.at("coproc.meta").value;
  model.s_max = meta(0, 0);
  model.rate_max = meta(0, 1);
  const Matrix& dgm = ckpt.at("coproc.en_digest").value;
  const std::uint64_t dg = (static_cast<std::uint64_t>(dgm(0, 0)) << 32) |
                           static_cast<std::uint64_t>(dgm(0, 1));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(dg));
  model.en_digest = buf;
  if (include_en && !model.en_digest_intact())
    throw std::runtime_error("coproc checkpoint: emulator digest does not match its weights");
  return model;
}

}  // namespace bbci::coproc
