#include "bbci/codec/multiclass.hpp"

#include <cmath>

#include "bbci/core/kernels.hpp"

namespace bbci::codec {

Vector MulticlassModel::scores(const Vector& x) const {
  Vector s = kernels::matvec(weights, x);
  for (std::size_t c = 0; c < s.size(); ++c) s[c] += biases[c];
  return s;
}

std::size_t MulticlassModel::predict(const Vector& x) const { return argmax(scores(x)); }

std::size_t argmax(const Vector& scores) {
  require(!scores.empty(), "argmax: empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

MulticlassModel multiclass_fit(const Matrix& features, const std::vector<std::size_t>& labels,
                               std::size_t k, const MulticlassFitOptions& opts) {
  require(features.rows() == labels.size(), "multiclass_fit: one label per feature row");
  require(k >= 2, "multiclass_fit: need at least 2 classes");
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t label : labels) {
    require(label < k, "multiclass_fit: label " + std::to_string(label) + " out of range");
    counts[label] += 1;
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] == 0)
      throw std::invalid_argument("multiclass_fit: class " + std::to_string(c) +
                                  " missing from the training data");

  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  MulticlassModel model;
  model.weights = Matrix(k, d);
  model.biases.assign(k, 0.0);

  // Full-batch gradient descent on the logistic loss, one binary problem
  // per class.
  for (std::size_t c = 0; c < k; ++c) {
    Vector w(d, 0.0);
    double b = 0.0;
    for (std::size_t it = 0; it < opts.iterations; ++it) {
      Vector gw(d, 0.0);
      double gb = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double z = b;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * features(r, j);
        const double y = labels[r] == c ? 1.0 : -1.0;
        const double p = 1.0 / (1.0 + std::exp(y * z));  // -dLoss/dz * y
        const double coeff = -y * p / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j) gw[j] += coeff * features(r, j);
        gb += coeff;
      }
      for (std::size_t j = 0; j < d; ++j) w[j] -= opts.step_size * gw[j];
      b -= opts.step_size * gb;
    }
    for (std::size_t j = 0; j < d; ++j) model.weights(c, j) = w[j];
    model.biases[c] = b;
  }
  return model;
}

}  // namespace bbci::codec
