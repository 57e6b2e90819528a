#include "bbci/diffnet/gradcheck.hpp"

#include <cmath>
#include <cstdint>

namespace bbci::diffnet {

SeqLoss squared_error_loss(std::vector<Vector> targets) {
  SeqLoss loss;
  loss.value = [targets](const std::vector<Vector>& outputs) {
    if (outputs.size() != targets.size())
      throw std::invalid_argument("squared_error_loss: output/target length mismatch");
    double acc = 0.0;
    for (std::size_t t = 0; t < outputs.size(); ++t)
      for (std::size_t i = 0; i < outputs[t].size(); ++i) {
        const double d = outputs[t][i] - targets[t][i];
        acc += d * d;
      }
    return acc;
  };
  loss.grad = [targets](const std::vector<Vector>& outputs) {
    std::vector<Vector> g(outputs.size());
    for (std::size_t t = 0; t < outputs.size(); ++t) {
      g[t].resize(outputs[t].size());
      for (std::size_t i = 0; i < outputs[t].size(); ++i)
        g[t][i] = 2.0 * (outputs[t][i] - targets[t][i]);
    }
    return g;
  };
  return loss;
}

namespace {

double* param_slot(NetParams& p, std::size_t flat, std::string* name) {
  for (auto& l : p.layers) {
    if (flat < l.weights.size()) {
      if (name)
        *name = l.name + ".w[" + std::to_string(flat / l.weights.cols()) + "," +
                std::to_string(flat % l.weights.cols()) + "]";
      return l.weights.data() + flat;
    }
    flat -= l.weights.size();
    if (flat < l.recurrent.size()) {
      if (name)
        *name = l.name + ".u[" + std::to_string(flat / l.recurrent.cols()) + "," +
                std::to_string(flat % l.recurrent.cols()) + "]";
      return l.recurrent.data() + flat;
    }
    flat -= l.recurrent.size();
    if (flat < l.bias.size()) {
      if (name) *name = l.name + ".b[" + std::to_string(flat) + "]";
      return l.bias.data() + flat;
    }
    flat -= l.bias.size();
  }
  throw std::out_of_range("param index out of range");
}

double grad_slot(const GradSet& g, std::size_t flat) {
  for (const auto& l : g.layers) {
    if (flat < l.d_weights.size()) return l.d_weights.data()[flat];
    flat -= l.d_weights.size();
    if (flat < l.d_recurrent.size()) return l.d_recurrent.data()[flat];
    flat -= l.d_recurrent.size();
    if (flat < l.d_bias.size()) return l.d_bias[flat];
    flat -= l.d_bias.size();
  }
  throw std::out_of_range("grad index out of range");
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradSet numeric_from_loss(const NetParams& params,
                          const std::function<double(const NetParams&)>& loss_of_params,
                          double eps) {
  const std::size_t n = params.parameter_count();
  if (n > kGradCheckMaxParams)
    throw std::invalid_argument("grad check: " + std::to_string(n) +
                                " parameters exceeds the exhaustive-perturbation limit of " +
                                std::to_string(kGradCheckMaxParams));
  GradSet numeric = zero_grads(params);
  std::vector<double*> slots(n);
  {
    GradSet* g = &numeric;
    std::size_t flat = 0;
    for (auto& l : g->layers) {
      for (std::size_t i = 0; i < l.d_weights.size(); ++i) slots[flat++] = l.d_weights.data() + i;
      for (std::size_t i = 0; i < l.d_recurrent.size(); ++i)
        slots[flat++] = l.d_recurrent.data() + i;
      for (std::size_t i = 0; i < l.d_bias.size(); ++i) slots[flat++] = &l.d_bias[i];
    }
  }

  std::string first_error;
#pragma omp parallel for schedule(dynamic, 16) if (n >= 64)
  for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(n); ++idx) {
    NetParams work = params;
    std::string name;
    double* slot = param_slot(work, static_cast<std::size_t>(idx), &name);
    const double orig = *slot;
    *slot = orig + eps;
    const double up = loss_of_params(work);
    *slot = orig - eps;
    const double down = loss_of_params(work);
    const double g = (up - down) / (2.0 * eps);
    if (!std::isfinite(g)) {
#pragma omp critical
      if (first_error.empty())
        first_error = "grad check: non-finite numeric gradient at parameter " + name;
      continue;
    }
    *slots[idx] = g;
  }
  if (!first_error.empty()) throw std::runtime_error(first_error);
  return numeric;
}

}  // namespace

GradSet numeric_gradients(const NetParams& params, const std::vector<Vector>& inputs,
                          const NetState* initial_state, const SeqLoss& loss, double eps) {
  const NetState init = initial_state ? *initial_state : zero_state(params);
  return numeric_from_loss(
      params,
      [&](const NetParams& p) { return loss.value(net_forward(p, inputs, &init).outputs); },
      eps);
}

double max_relative_gap(const GradSet& a, const GradSet& b) {
  if (a.layers.size() != b.layers.size())
    throw std::invalid_argument("max_relative_gap: layer count mismatch");
  double worst = 0.0;
  std::size_t count = 0;
  for (const auto& l : a.layers)
    count += l.d_weights.size() + l.d_recurrent.size() + l.d_bias.size();
  for (std::size_t i = 0; i < count; ++i)
    worst = std::max(worst, relative_gap(grad_slot(a, i), grad_slot(b, i)));
  return worst;
}

double grad_check(const NetParams& params, const std::vector<Vector>& inputs,
                  const NetState* initial_state, const SeqLoss& loss, double eps) {
  const NetState init = initial_state ? *initial_state : zero_state(params);
  const ForwardResult fwd = net_forward(params, inputs, &init);
  const BackwardResult analytic = net_backward(params, inputs, &init, loss.grad(fwd.outputs));
  const GradSet numeric = numeric_gradients(params, inputs, &init, loss, eps);
  if (!std::isfinite(analytic.grads.max_abs()))
    throw std::runtime_error("grad_check: non-finite analytic gradient");
  return max_relative_gap(analytic.grads, numeric);
}

double grad_check_against(const NetParams& params, const GradSet& analytic,
                          const std::function<double(const NetParams&)>& loss_of_params,
                          double eps) {
  const GradSet numeric = numeric_from_loss(params, loss_of_params, eps);
  return max_relative_gap(analytic, numeric);
}

}  // namespace bbci::diffnet
