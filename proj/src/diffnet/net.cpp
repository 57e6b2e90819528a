#include "bbci/diffnet/net.hpp"

#include <cmath>

#include "bbci/core/kernels.hpp"

namespace bbci::diffnet {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::bounded_sigmoid: return "bounded_sigmoid";
  }
  return "?";
}

std::string to_string(LayerKind k) {
  return k == LayerKind::dense ? "dense" : "recurrent";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "bounded_sigmoid") return Activation::bounded_sigmoid;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

namespace {

double apply_act(Activation a, double z, double scale) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::bounded_sigmoid: return scale / (1.0 + std::exp(-z));
  }
  return z;
}

// derivative in terms of pre-activation z and post-activation h
double act_deriv(Activation a, double z, double h, double scale) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: return 1.0 - h * h;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::bounded_sigmoid: {
      const double s = h / scale;  // sigma(z)
      return scale * s * (1.0 - s);
    }
  }
  return 1.0;
}

}  // namespace

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.recurrent.size() + l.bias.size();
  return n;
}

void NetParams::validate() const {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Layer& l = layers[k];
    if (l.name.empty()) throw std::invalid_argument("net: layer " + std::to_string(k) + " unnamed");
    if (l.bias.size() != l.out_dim())
      throw std::invalid_argument("net: layer '" + l.name + "' bias size " +
                                  std::to_string(l.bias.size()) + " != out dim " +
                                  std::to_string(l.out_dim()));
    if (l.kind == LayerKind::recurrent) {
      if (l.recurrent.rows() != l.out_dim() || l.recurrent.cols() != l.out_dim())
        throw std::invalid_argument("net: layer '" + l.name + "' recurrent matrix not out x out");
    } else if (!l.recurrent.empty()) {
      throw std::invalid_argument("net: dense layer '" + l.name + "' carries recurrent weights");
    }
    if (k > 0 && layers[k - 1].out_dim() != l.in_dim())
      throw std::invalid_argument("net: layer '" + l.name + "' input dim " +
                                  std::to_string(l.in_dim()) + " != previous out dim " +
                                  std::to_string(layers[k - 1].out_dim()));
    if (!l.weights.all_finite() || !l.recurrent.all_finite() || !all_finite(l.bias))
      throw std::invalid_argument("net: layer '" + l.name + "' has non-finite parameters");
  }
}

NetState zero_state(const NetParams& params) {
  NetState s;
  s.hidden.resize(params.layers.size());
  for (std::size_t k = 0; k < params.layers.size(); ++k)
    if (params.layers[k].kind == LayerKind::recurrent)
      s.hidden[k].assign(params.layers[k].out_dim(), 0.0);
  return s;
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

}  // namespace

Layer make_dense(std::string name, std::size_t in, std::size_t out, Activation act, Rng& rng,
                 double out_scale) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::dense;
  l.weights = uniform_matrix(out, in, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  l.bias.assign(out, 0.0);
  l.activation = act;
  l.out_scale = out_scale;
  return l;
}

Layer make_recurrent(std::string name, std::size_t in, std::size_t out, Activation act,
                     Rng& rng, double out_scale) {
  Layer l = make_dense(std::move(name), in, out, act, rng, out_scale);
  l.kind = LayerKind::recurrent;
  l.recurrent = uniform_matrix(out, out, 1.0 / std::sqrt(static_cast<double>(out)), rng);
  return l;
}

namespace {

struct Trace {
  // per step, per layer: layer input, pre-activation, post-activation
  std::vector<std::vector<Vector>> inputs;
  std::vector<std::vector<Vector>> pre;
  std::vector<std::vector<Vector>> post;
};

void check_state(const NetParams& params, const NetState& st) {
  if (st.hidden.size() != params.layers.size())
    throw std::invalid_argument("net: state has " + std::to_string(st.hidden.size()) +
                                " slots for " + std::to_string(params.layers.size()) + " layers");
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const bool rec = params.layers[k].kind == LayerKind::recurrent;
    const std::size_t want = rec ? params.layers[k].out_dim() : 0;
    if (st.hidden[k].size() != want)
      throw std::invalid_argument("net: state slot for layer '" + params.layers[k].name +
                                  "' has size " + std::to_string(st.hidden[k].size()));
  }
}

ForwardResult forward_impl(const NetParams& params, const std::vector<Vector>& inputs,
                           const NetState* initial_state, Trace* trace) {
  params.validate();
  NetState state = initial_state ? *initial_state : zero_state(params);
  check_state(params, state);

  ForwardResult res;
  res.outputs.reserve(inputs.size());
  if (trace) {
    trace->inputs.resize(inputs.size());
    trace->pre.resize(inputs.size());
    trace->post.resize(inputs.size());
  }

  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!params.layers.empty() && inputs[t].size() != params.input_dim())
      throw std::invalid_argument("net_forward: step " + std::to_string(t) + " input dim " +
                                  std::to_string(inputs[t].size()) + " != layer '" +
                                  params.layers.front().name + "' input dim " +
                                  std::to_string(params.input_dim()));
    Vector x = inputs[t];
    if (trace) {
      trace->inputs[t].resize(params.layers.size());
      trace->pre[t].resize(params.layers.size());
      trace->post[t].resize(params.layers.size());
    }
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
      const Layer& l = params.layers[k];
      Vector z = kernels::matvec(l.weights, x);
      if (l.kind == LayerKind::recurrent) {
        const Vector uz = kernels::matvec(l.recurrent, state.hidden[k]);
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += uz[i];
      }
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += l.bias[i];
      Vector h(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) h[i] = apply_act(l.activation, z[i], l.out_scale);
      if (trace) {
        trace->inputs[t][k] = x;
        trace->pre[t][k] = z;
        trace->post[t][k] = h;
      }
      if (l.kind == LayerKind::recurrent) state.hidden[k] = h;
      x = std::move(h);
    }
    res.outputs.push_back(std::move(x));
  }
  res.final_state = std::move(state);
  return res;
}

}  // namespace

ForwardResult net_forward(const NetParams& params, const std::vector<Vector>& inputs,
                          const NetState* initial_state) {
  return forward_impl(params, inputs, initial_state, nullptr);
}

GradSet zero_grads(const NetParams& params) {
  GradSet g;
  g.layers.resize(params.layers.size());
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const Layer& l = params.layers[k];
    g.layers[k].d_weights = Matrix(l.weights.rows(), l.weights.cols());
    if (l.kind == LayerKind::recurrent)
      g.layers[k].d_recurrent = Matrix(l.recurrent.rows(), l.recurrent.cols());
    g.layers[k].d_bias.assign(l.bias.size(), 0.0);
  }
  return g;
}

void GradSet::add_scaled(const GradSet& other, double s) {
  if (layers.size() != other.layers.size())
    throw std::invalid_argument("GradSet::add_scaled: layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& a = layers[k];
    const auto& b = other.layers[k];
    if (!a.d_weights.same_shape(b.d_weights) || !a.d_recurrent.same_shape(b.d_recurrent) ||
        a.d_bias.size() != b.d_bias.size())
      throw std::invalid_argument("GradSet::add_scaled: shape mismatch at layer " +
                                  std::to_string(k));
    for (std::size_t i = 0; i < a.d_weights.size(); ++i)
      a.d_weights.data()[i] += s * b.d_weights.data()[i];
    for (std::size_t i = 0; i < a.d_recurrent.size(); ++i)
      a.d_recurrent.data()[i] += s * b.d_recurrent.data()[i];
    for (std::size_t i = 0; i < a.d_bias.size(); ++i) a.d_bias[i] += s * b.d_bias[i];
  }
}

void GradSet::scale(double s) {
  for (auto& l : layers) {
    for (std::size_t i = 0; i < l.d_weights.size(); ++i) l.d_weights.data()[i] *= s;
    for (std::size_t i = 0; i < l.d_recurrent.size(); ++i) l.d_recurrent.data()[i] *= s;
    for (double& b : l.d_bias) b *= s;
  }
}

double GradSet::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    for (std::size_t i = 0; i < l.d_weights.size(); ++i)
      m = std::max(m, std::abs(l.d_weights.data()[i]));
    for (std::size_t i = 0; i < l.d_recurrent.size(); ++i)
      m = std::max(m, std::abs(l.d_recurrent.data()[i]));
    for (double b : l.d_bias) m = std::max(m, std::abs(b));
  }
  return m;
}

BackwardResult net_backward(const NetParams& params, const std::vector<Vector>& inputs,
                            const NetState* initial_state,
                            const std::vector<Vector>& output_grads) {
  if (output_grads.size() != inputs.size())
    throw std::invalid_argument("net_backward: " + std::to_string(output_grads.size()) +
                                " output grads for " + std::to_string(inputs.size()) + " steps");
  Trace trace;
  forward_impl(params, inputs, initial_state, &trace);

  const std::size_t n_layers = params.layers.size();
  BackwardResult res;
  res.grads = zero_grads(params);
  res.input_grads.assign(inputs.size(), Vector());

  // dLoss/dh_k,t arriving from step t+1 through the recurrent weights
  std::vector<Vector> carry(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k)
    if (params.layers[k].kind == LayerKind::recurrent)
      carry[k].assign(params.layers[k].out_dim(), 0.0);

  const NetState init = initial_state ? *initial_state : zero_state(params);

  for (std::size_t t = inputs.size(); t-- > 0;) {
    if (n_layers == 0) {
      // empty net is the identity pipeline
      if (output_grads[t].size() != inputs[t].size())
        throw std::invalid_argument("net_backward: output grad dim mismatch at step " +
                                    std::to_string(t));
      res.input_grads[t] = output_grads[t];
      continue;
    }
    if (output_grads[t].size() != params.output_dim())
      throw std::invalid_argument("net_backward: output grad dim " +
                                  std::to_string(output_grads[t].size()) + " != net output dim " +
                                  std::to_string(params.output_dim()) + " at step " +
                                  std::to_string(t));
    Vector down = output_grads[t];  // dLoss/d(post-activation of current layer)
    for (std::size_t k = n_layers; k-- > 0;) {
      const Layer& l = params.layers[k];
      Vector dh = std::move(down);
      if (l.kind == LayerKind::recurrent)
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += carry[k][i];

      Vector dz(dh.size());
      for (std::size_t i = 0; i < dh.size(); ++i)
        dz[i] = dh[i] * act_deriv(l.activation, trace.pre[t][k][i], trace.post[t][k][i],
                                  l.out_scale);

      kernels::add_outer(res.grads.layers[k].d_weights, dz, trace.inputs[t][k]);
      for (std::size_t i = 0; i < dz.size(); ++i) res.grads.layers[k].d_bias[i] += dz[i];
      if (l.kind == LayerKind::recurrent) {
        const Vector& h_prev = t > 0 ? trace.post[t - 1][k] : init.hidden[k];
        kernels::add_outer(res.grads.layers[k].d_recurrent, dz, h_prev);
        carry[k] = kernels::matvec_transpose(l.recurrent, dz);
      }
      down = kernels::matvec_transpose(l.weights, dz);
    }
    res.input_grads[t] = std::move(down);
  }
  return res;
}

Checkpoint to_checkpoint(const NetParams& params, const std::string& prefix) {
  params.validate();
  Checkpoint ckpt;
  for (const Layer& l : params.layers) {
    const std::string base = prefix + l.name;
    ckpt.add(base + ".w", to_string(l.kind) + ":" + to_string(l.activation), l.weights);
    if (l.kind == LayerKind::recurrent) ckpt.add(base + ".u", "recurrent_weights", l.recurrent);
    Matrix b(1, l.bias.size());
    for (std::size_t i = 0; i < l.bias.size(); ++i) b(0, i) = l.bias[i];
    ckpt.add(base + ".b", "bias", b);
    if (l.activation == Activation::bounded_sigmoid) {
      Matrix s(1, 1);
      s(0, 0) = l.out_scale;
      ckpt.add(base + ".scale", "out_scale", s);
    }
  }
  return ckpt;
}

NetParams net_params_from_checkpoint(const Checkpoint& ckpt, const std::string& prefix) {
  NetParams params;
  for (std::size_t i = 0; i < ckpt.arrays.size(); ++i) {
    const NamedArray& a = ckpt.arrays[i];
    if (a.name.size() < prefix.size() + 2 || a.name.compare(0, prefix.size(), prefix) != 0)
      continue;
    if (a.name.size() < 2 || a.name.substr(a.name.size() - 2) != ".w") continue;
    const std::string base = a.name.substr(0, a.name.size() - 2);
    const auto colon = a.kind.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("checkpoint: layer array '" + a.name + "' has kind '" + a.kind +
                               "', expected kind:activation");
    Layer l;
    l.name = base.substr(prefix.size());
    const std::string kind = a.kind.substr(0, colon);
    if (kind == "dense")
      l.kind = LayerKind::dense;
    else if (kind == "recurrent")
      l.kind = LayerKind::recurrent;
    else
      throw std::runtime_error("checkpoint: unknown layer kind '" + kind + "'");
    l.activation = activation_from_string(a.kind.substr(colon + 1));
    l.weights = a.value;
    if (l.kind == LayerKind::recurrent) l.recurrent = ckpt.at(base + ".u").value;
    const Matrix& b = ckpt.at(base + ".b").value;
    l.bias = b.row(0);
    if (l.activation == Activation::bounded_sigmoid)
      l.out_scale = ckpt.at(base + ".scale").value(0, 0);
    params.layers.push_back(std::move(l));
  }
  params.validate();
  return params;
}

std::string params_digest(const NetParams& params) {
  return checkpoint_digest(to_checkpoint(params));
}

}  // namespace bbci::diffnet
