#pragma once

#include <utility>

#include "bbci/diffnet/net.hpp"

namespace bbci::diffnet {

enum class OptMethod { sgd_momentum, adam };

struct OptState {
  OptMethod method = OptMethod::adam;
  double step_size = 1e-3;
  double momentum = 0.9;          // sgd_momentum only
  double beta1 = 0.9;             // adam
  double beta2 = 0.999;           // adam
  double epsilon = 1e-8;          // adam
  GradSet first;                  // velocity / first moment
  GradSet second;                 // adam second moment
  long step_count = 0;
};

OptState make_opt_state(OptMethod method, double step_size, const NetParams& params);

// Pure update: returns new parameters and the advanced optimizer state.
std::pair<NetParams, OptState> opt_step(const NetParams& params, const GradSet& grads,
                                        const OptState& state);

}  // namespace bbci::diffnet
