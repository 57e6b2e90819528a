#pragma once

#include <string>
#include <vector>

#include "bbci/core/checkpoint.hpp"
#include "bbci/core/matrix.hpp"
#include "bbci/core/rng.hpp"

namespace bbci::diffnet {

enum class Activation { identity, tanh, relu, bounded_sigmoid };
enum class LayerKind { dense, recurrent };

std::string to_string(Activation a);
std::string to_string(LayerKind k);
Activation activation_from_string(const std::string& s);

// One layer of a feedforward/Elman stack.
//   dense:      h_t = phi(W x_t + b)
//   recurrent:  h_t = phi(W x_t + U h_{t-1} + b)
// bounded_sigmoid maps into [0, out_scale], so a stimulation output is
// physically bounded by construction.
struct Layer {
  std::string name;
  LayerKind kind = LayerKind::dense;
  Matrix weights;    // out x in
  Matrix recurrent;  // out x out, recurrent layers only
  Vector bias;       // out
  Activation activation = Activation::identity;
  double out_scale = 1.0;  // bounded_sigmoid ceiling; ignored otherwise

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }
};

struct NetParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
  std::size_t parameter_count() const;
  void validate() const;  // dimension chain + finiteness
};

// Hidden vectors per layer; empty slots for dense layers.
struct NetState {
  std::vector<Vector> hidden;
};

NetState zero_state(const NetParams& params);

// Seeded builders; weights uniform in +-1/sqrt(fan_in).
Layer make_dense(std::string name, std::size_t in, std::size_t out, Activation act, Rng& rng,
                 double out_scale = 1.0);
Layer make_recurrent(std::string name, std::size_t in, std::size_t out, Activation act,
                     Rng& rng, double out_scale = 1.0);

struct ForwardResult {
  std::vector<Vector> outputs;
  NetState final_state;
};

// Runs the stack over an input sequence. An empty net passes inputs
// through unchanged. `initial_state` of nullptr means zeros.
ForwardResult net_forward(const NetParams& params, const std::vector<Vector>& inputs,
                          const NetState* initial_state = nullptr);

// Gradients, shape-congruent with the NetParams they were computed for.
struct LayerGrads {
  Matrix d_weights;
  Matrix d_recurrent;
  Vector d_bias;
};

struct GradSet {
  std::vector<LayerGrads> layers;

  void add_scaled(const GradSet& other, double s);
  void scale(double s);
  double max_abs() const;
};

GradSet zero_grads(const NetParams& params);

struct BackwardResult {
  GradSet grads;
  std::vector<Vector> input_grads;  // dLoss/d input_t, needed to chain stacks
};

// Reverse-mode accumulation through time. `output_grads[t]` is
// dLoss/d output_t; its length must equal the forward output length.
BackwardResult net_backward(const NetParams& params, const std::vector<Vector>& inputs,
                            const NetState* initial_state,
                            const std::vector<Vector>& output_grads);

// Checkpoint adapters (shared text container format).
Checkpoint to_checkpoint(const NetParams& params, const std::string& prefix = "");
NetParams net_params_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix = "");
std::string params_digest(const NetParams& params);

}  // namespace bbci::diffnet
