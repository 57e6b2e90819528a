#include "bbci/codec/lda.hpp"

#include "bbci/core/kernels.hpp"
#include "bbci/core/linalg.hpp"

namespace bbci::codec {

double LdaModel::score(const Vector& x) const { return kernels::dot(weight, x); }

int LdaModel::predict(const Vector& x) const {
  return score(x) > threshold ? class_labels[1] : class_labels[0];
}

LdaModel lda_fit(const Matrix& features, const std::vector<int>& labels, double ridge) {
  require(features.rows() == labels.size(), "lda_fit: one label per feature row");
  require(features.rows() > 0, "lda_fit: empty training data");
  const std::size_t d = features.cols();

  std::size_t n0 = 0, n1 = 0;
  Vector mu0(d, 0.0), mu1(d, 0.0);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    if (labels[r] != 0 && labels[r] != 1)
      throw std::invalid_argument("lda_fit: labels must be 0 or 1");
    Vector& mu = labels[r] ? mu1 : mu0;
    (labels[r] ? n1 : n0) += 1;
    for (std::size_t j = 0; j < d; ++j) mu[j] += features(r, j);
  }
  if (n0 == 0 || n1 == 0)
    throw std::invalid_argument("lda_fit: both classes must be present in the training data");
  for (std::size_t j = 0; j < d; ++j) {
    mu0[j] /= static_cast<double>(n0);
    mu1[j] /= static_cast<double>(n1);
  }

  Matrix pooled(d, d);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const Vector& mu = labels[r] ? mu1 : mu0;
    for (std::size_t i = 0; i < d; ++i) {
      const double di = features(r, i) - mu[i];
      for (std::size_t j = 0; j < d; ++j) pooled(i, j) += di * (features(r, j) - mu[j]);
    }
  }
  const double denom = static_cast<double>(features.rows() - 2 > 0 ? features.rows() - 2 : 1);
  for (std::size_t i = 0; i < pooled.size(); ++i) pooled.data()[i] /= denom;
  for (std::size_t i = 0; i < d; ++i) pooled(i, i) += ridge;

  LdaModel model;
  model.weight = linalg::solve(pooled, linalg::subtract(mu1, mu0));
  Vector mid(d);
  for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (mu0[j] + mu1[j]);
  model.threshold = kernels::dot(model.weight, mid);
  return model;
}

}  // namespace bbci::codec
