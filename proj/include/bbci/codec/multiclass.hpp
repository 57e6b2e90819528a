#pragma once

#include "bbci/core/matrix.hpp"

namespace bbci::codec {

// One-vs-rest linear classifiers trained with logistic loss; prediction
// is the argmax of per-class scores. The score vector is exposed so
// downstream stimulation-intensity maps can key off it.
struct MulticlassModel {
  Matrix weights;  // k x d
  Vector biases;   // k
  std::size_t num_classes() const { return weights.rows(); }

  Vector scores(const Vector& x) const;
  std::size_t predict(const Vector& x) const;
};

struct MulticlassFitOptions {
  std::size_t iterations = 400;
  double step_size = 0.1;
};

// `labels` are 0..k-1 and every class must be present.
MulticlassModel multiclass_fit(const Matrix& features, const std::vector<std::size_t>& labels,
                               std::size_t k, const MulticlassFitOptions& opts = {});

std::size_t argmax(const Vector& scores);

}  // namespace bbci::codec
