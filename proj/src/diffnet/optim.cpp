#include "bbci/diffnet/optim.hpp"

#include <cmath>
#include <span>

namespace bbci::diffnet {

OptState make_opt_state(OptMethod method, double step_size, const NetParams& params) {
  OptState st;
  st.method = method;
  st.step_size = step_size;
  st.first = zero_grads(params);
  st.second = zero_grads(params);
  return st;
}

namespace {

struct Slot {
  std::span<double> param;
  std::span<const double> grad;
  std::span<double> first;
  std::span<double> second;
};

template <typename Fn>
void for_each_slot(NetParams& p, const GradSet& g, OptState& st, Fn&& fn) {
  if (g.layers.size() != p.layers.size())
    throw std::invalid_argument("opt_step: grads have " + std::to_string(g.layers.size()) +
                                " layers for " + std::to_string(p.layers.size()));
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    Layer& l = p.layers[k];
    const LayerGrads& lg = g.layers[k];
    LayerGrads& m1 = st.first.layers[k];
    LayerGrads& m2 = st.second.layers[k];
    if (!l.weights.same_shape(lg.d_weights) || !l.recurrent.same_shape(lg.d_recurrent) ||
        l.bias.size() != lg.d_bias.size())
      throw std::invalid_argument("opt_step: gradient shape mismatch at layer '" + l.name + "'");
    fn(Slot{{l.weights.data(), l.weights.size()},
            {lg.d_weights.data(), lg.d_weights.size()},
            {m1.d_weights.data(), m1.d_weights.size()},
            {m2.d_weights.data(), m2.d_weights.size()}});
    fn(Slot{{l.recurrent.data(), l.recurrent.size()},
            {lg.d_recurrent.data(), lg.d_recurrent.size()},
            {m1.d_recurrent.data(), m1.d_recurrent.size()},
            {m2.d_recurrent.data(), m2.d_recurrent.size()}});
    fn(Slot{{l.bias.data(), l.bias.size()},
            {lg.d_bias.data(), lg.d_bias.size()},
            {m1.d_bias.data(), m1.d_bias.size()},
            {m2.d_bias.data(), m2.d_bias.size()}});
  }
}

}  // namespace

std::pair<NetParams, OptState> opt_step(const NetParams& params, const GradSet& grads,
                                        const OptState& state) {
  NetParams p = params;
  OptState st = state;
  st.step_count += 1;

  if (st.method == OptMethod::sgd_momentum) {
    for_each_slot(p, grads, st, [&](Slot s) {
      for (std::size_t i = 0; i < s.param.size(); ++i) {
        s.first[i] = st.momentum * s.first[i] + s.grad[i];
        s.param[i] -= st.step_size * s.first[i];
      }
    });
  } else {
    const double t = static_cast<double>(st.step_count);
    const double bc1 = 1.0 - std::pow(st.beta1, t);
    const double bc2 = 1.0 - std::pow(st.beta2, t);
    for_each_slot(p, grads, st, [&](Slot s) {
      for (std::size_t i = 0; i < s.param.size(); ++i) {
        s.first[i] = st.beta1 * s.first[i] + (1.0 - st.beta1) * s.grad[i];
        s.second[i] = st.beta2 * s.second[i] + (1.0 - st.beta2) * s.grad[i] * s.grad[i];
        const double mhat = s.first[i] / bc1;
        const double vhat = s.second[i] / bc2;
        s.param[i] -= st.step_size * mhat / (std::sqrt(vhat) + st.epsilon);
      }
    });
  }
  return {std::move(p), std::move(st)};
}

}  // namespace bbci::diffnet
