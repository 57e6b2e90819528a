#pragma once

#include <functional>

#include "bbci/diffnet/net.hpp"

namespace bbci::diffnet {

// A scalar loss over an output sequence, with its per-step gradients.
struct SeqLoss {
  std::function<double(const std::vector<Vector>&)> value;
  std::function<std::vector<Vector>(const std::vector<Vector>&)> grad;
};

// Sum over steps of squared distance to per-step targets.
SeqLoss squared_error_loss(std::vector<Vector> targets);

// Central-difference gradient of loss(net_forward(params, inputs)) with
// respect to every parameter. Perturbs each parameter independently, so
// the loop parallelizes across parameters without changing results.
GradSet numeric_gradients(const NetParams& params, const std::vector<Vector>& inputs,
                          const NetState* initial_state, const SeqLoss& loss,
                          double eps = 1e-5);

// max over parameters of |a - b| / max(|a|, |b|, 1e-8)
double max_relative_gap(const GradSet& a, const GradSet& b);

// Compares analytic backpropagation against central differences.
// Networks must stay small enough to perturb exhaustively (<= 5000
// parameters). Throws on non-finite intermediates, naming the parameter.
double grad_check(const NetParams& params, const std::vector<Vector>& inputs,
                  const NetState* initial_state, const SeqLoss& loss, double eps = 1e-5);

// Variant for composed stacks (e.g. co-processor + frozen emulator):
// `loss_of_params` evaluates the full pipeline loss for perturbed copies
// of `params`, while `analytic` is the gradient claimed for them.
double grad_check_against(const NetParams& params, const GradSet& analytic,
                          const std::function<double(const NetParams&)>& loss_of_params,
                          double eps = 1e-5);

inline constexpr std::size_t kGradCheckMaxParams = 5000;

}  // namespace bbci::diffnet
