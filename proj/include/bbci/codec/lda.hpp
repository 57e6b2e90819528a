#pragma once

#include <array>

#include "bbci/core/matrix.hpp"

namespace bbci::codec {

// Binary Fisher discriminant: weight = pooled_cov^{-1} (mu1 - mu0),
// threshold at the projected midpoint of the class means.
struct LdaModel {
  Vector weight;
  double threshold = 0.0;
  std::array<int, 2> class_labels{0, 1};

  double score(const Vector& x) const;
  int predict(const Vector& x) const;  // class_labels[score > threshold]
};

// `labels` must contain both 0 and 1. A small ridge keeps the pooled
// covariance invertible on degenerate data.
LdaModel lda_fit(const Matrix& features, const std::vector<int>& labels,
                 double ridge = 1e-6);

}  // namespace bbci::codec
