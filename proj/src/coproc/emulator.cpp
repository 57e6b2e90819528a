#include <cmath>
#include <cstdint>

#include "bbci/coproc/coproc.hpp"

namespace bbci::coproc {

using diffnet::Activation;
using diffnet::make_dense;
using diffnet::make_recurrent;
using diffnet::net_backward;
using diffnet::net_forward;

NetParams default_en(std::size_t n_b, std::size_t n_a, std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  NetParams en;
  en.layers.push_back(make_recurrent("state", n_b + n_a, hidden, Activation::tanh, rng));
  en.layers.push_back(make_dense("readout", hidden, 2, Activation::identity, rng));
  en.validate();
  return en;
}

NetParams default_ncp(std::size_t n_a, std::size_t n_b, std::size_t hidden, double s_max,
                      std::uint64_t seed, std::size_t extra_inputs) {
  Rng rng(seed);
  NetParams ncp;
  ncp.layers.push_back(
      make_recurrent("encode", n_a + extra_inputs, hidden, Activation::tanh, rng));
  ncp.layers.push_back(make_dense("stim", hidden, n_b, Activation::bounded_sigmoid, rng, s_max));
  ncp.validate();
  return ncp;
}

void CoprocModel::refresh_en_digest() { en_digest = diffnet::params_digest(en); }

bool CoprocModel::en_digest_intact() const {
  return !en_digest.empty() && en_digest == diffnet::params_digest(en);
}

std::vector<Vector> en_inputs(const std::vector<Vector>& stim, const Vector& context,
                              double s_max, double rate_max) {
  std::vector<Vector> inputs(stim.size());
  for (std::size_t t = 0; t < stim.size(); ++t) {
    Vector& in = inputs[t];
    in.reserve(stim[t].size() + context.size());
    for (double s : stim[t]) in.push_back(s / s_max);
    for (double c : context) in.push_back(c / rate_max);
  }
  return inputs;
}

namespace {

std::vector<Vector> position_targets(const Trajectory& traj) {
  std::vector<Vector> targets(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t)
    targets[t] = {traj[t].pos[0], traj[t].pos[1]};
  return targets;
}

// mean over bins and coordinates of squared prediction error
double trajectory_mse(const std::vector<Vector>& pred, const std::vector<Vector>& target) {
  double acc = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t)
    for (std::size_t i = 0; i < 2; ++i) {
      const double d = pred[t][i] - target[t][i];
      acc += d * d;
    }
  return acc / (2.0 * static_cast<double>(pred.size()));
}

}  // namespace

EmulatorTrainResult train_emulator(const EmulatorDataset& dataset, NetParams en_init,
                                   std::size_t epochs, OptState opt) {
  require(!dataset.records.empty(), "train_emulator: dataset is empty");
  en_init.validate();
  const double rate_max = 100.0;  // rate normalization convention

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < dataset.records.size(); ++i)
    (dataset.records[i].validation ? val_idx : train_idx).push_back(i);
  require(!train_idx.empty(), "train_emulator: no training records after the split");

  NetParams en = std::move(en_init);
  EmulatorTrainResult res;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    // Per-trial gradients land in their own slots and are summed in trial
    // order afterwards, so thread count never changes the result.
    std::vector<GradSet> grads(train_idx.size());
    std::vector<double> losses(train_idx.size(), 0.0);
    std::string error;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t ti = 0; ti < static_cast<std::int64_t>(train_idx.size()); ++ti) {
      const EmulatorRecord& rec = dataset.records[train_idx[ti]];
      const auto inputs = en_inputs(rec.stim, rec.context, dataset.s_max, rate_max);
      const auto fwd = net_forward(en, inputs);
      const auto targets = position_targets(rec.behavior);
      losses[ti] = trajectory_mse(fwd.outputs, targets);
      std::vector<Vector> out_grads(fwd.outputs.size());
      const double scale = 1.0 / (2.0 * static_cast<double>(fwd.outputs.size()));
      for (std::size_t t = 0; t < fwd.outputs.size(); ++t) {
        out_grads[t].resize(2);
        for (std::size_t i = 0; i < 2; ++i)
          out_grads[t][i] = 2.0 * scale * (fwd.outputs[t][i] - targets[t][i]);
      }
      grads[ti] = net_backward(en, inputs, nullptr, out_grads).grads;
      if (!std::isfinite(losses[ti])) {
#pragma omp critical
        if (error.empty())
          error = "train_emulator: non-finite loss at epoch " + std::to_string(epoch);
      }
    }
    if (!error.empty()) throw std::runtime_error(error);

    GradSet batch = diffnet::zero_grads(en);
    double train_loss = 0.0;
    for (std::size_t ti = 0; ti < grads.size(); ++ti) {
      batch.add_scaled(grads[ti], 1.0 / static_cast<double>(grads.size()));
      train_loss += losses[ti] / static_cast<double>(grads.size());
    }

    auto [next, next_opt] = diffnet::opt_step(en, batch, opt);
    en = std::move(next);
    opt = std::move(next_opt);

    double val_loss = 0.0;
    for (std::size_t vi : val_idx) {
      const EmulatorRecord& rec = dataset.records[vi];
      const auto inputs = en_inputs(rec.stim, rec.context, dataset.s_max, rate_max);
      const auto fwd = net_forward(en, inputs);
      val_loss += trajectory_mse(fwd.outputs, position_targets(rec.behavior)) /
                  static_cast<double>(val_idx.empty() ? 1 : val_idx.size());
    }
    res.history.push_back({epoch, train_loss, val_loss});
  }
  res.en = std::move(en);
  return res;
}

double emulator_validation_r2(const NetParams& en, const EmulatorDataset& dataset,
                              double rate_max) {
  double sse = 0.0, sst = 0.0, mean_x = 0.0, mean_y = 0.0;
  std::size_t n = 0;
  for (const auto& rec : dataset.records) {
    if (!rec.validation) continue;
    for (const auto& p : rec.behavior) {
      mean_x += p.pos[0];
      mean_y += p.pos[1];
      n += 1;
    }
  }
  require(n > 0, "emulator_validation_r2: no validation records");
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  for (const auto& rec : dataset.records) {
    if (!rec.validation) continue;
    const auto inputs = en_inputs(rec.stim, rec.context, dataset.s_max, rate_max);
    const auto fwd = net_forward(en, inputs);
    for (std::size_t t = 0; t < rec.behavior.size(); ++t) {
      const double dx = fwd.outputs[t][0] - rec.behavior[t].pos[0];
      const double dy = fwd.outputs[t][1] - rec.behavior[t].pos[1];
      sse += dx * dx + dy * dy;
      const double cx = rec.behavior[t].pos[0] - mean_x;
      const double cy = rec.behavior[t].pos[1] - mean_y;
      sst += cx * cx + cy * cy;
    }
  }
  return sst > 0.0 ? 1.0 - sse / sst : 0.0;
}

}  // namespace bbci::coproc
