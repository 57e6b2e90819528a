#include "bbci/codec/kalman.hpp"

#include <cmath>

#include "bbci/core/kernels.hpp"
#include "bbci/core/linalg.hpp"

namespace bbci::codec {

using linalg::transpose;

void KalmanModel::validate() const {
  require(dyn_a.rows() == dyn_a.cols(), "kalman: dyn_a must be square");
  require(meas_b.cols() == dyn_a.rows(), "kalman: meas_b cols must equal state dim");
  require(q_cov.rows() == dyn_a.rows() && q_cov.cols() == dyn_a.rows(),
          "kalman: q_cov must be state x state");
  require(r_cov.rows() == meas_b.rows() && r_cov.cols() == meas_b.rows(),
          "kalman: r_cov must be obs x obs");
}

namespace {

// Solve M = Y X^T (X X^T)^{-1} from column samples; throws when X X^T is
// rank deficient.
Matrix least_squares_map(const std::vector<const Vector*>& xs,
                         const std::vector<const Vector*>& ys, const char* what) {
  const std::size_t n = xs.size();
  const std::size_t dx = xs[0]->size();
  const std::size_t dy = ys[0]->size();
  Matrix gram(dx, dx);
  Matrix cross(dy, dx);
  for (std::size_t t = 0; t < n; ++t) {
    const Vector& x = *xs[t];
    const Vector& y = *ys[t];
    for (std::size_t i = 0; i < dx; ++i)
      for (std::size_t j = 0; j < dx; ++j) gram(i, j) += x[i] * x[j];
    for (std::size_t i = 0; i < dy; ++i)
      for (std::size_t j = 0; j < dx; ++j) cross(i, j) += y[i] * x[j];
  }
  // M gram = cross  =>  gram^T M^T = cross^T; gram is symmetric.
  try {
    return transpose(linalg::solve_multi(gram, transpose(cross)));
  } catch (const std::runtime_error&) {
    throw std::runtime_error(std::string("kalman_fit: rank-deficient regressors while fitting ") +
                             what + " (state samples do not span the state space)");
  }
}

Matrix residual_covariance(const std::vector<Vector>& residuals) {
  const std::size_t n = residuals.size();
  const std::size_t d = residuals[0].size();
  Matrix cov(d, d);
  for (const Vector& r : residuals)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) += r[i] * r[j];
  for (std::size_t i = 0; i < cov.size(); ++i) cov.data()[i] /= static_cast<double>(n);
  return cov;
}

}  // namespace

KalmanModel kalman_fit(const std::vector<Vector>& states,
                       const std::vector<Vector>& observations) {
  require(states.size() == observations.size(), "kalman_fit: sequences must be paired");
  require(!states.empty(), "kalman_fit: empty training data");
  const std::size_t dx = states[0].size();
  const std::size_t dy = observations[0].size();
  require(states.size() >= dx + dy, "kalman_fit: need at least state_dim + obs_dim samples");
  for (const auto& x : states) require(x.size() == dx, "kalman_fit: ragged state vectors");
  for (const auto& y : observations)
    require(y.size() == dy, "kalman_fit: ragged observation vectors");

  KalmanModel m;
  {
    std::vector<const Vector*> xs, ys;
    for (std::size_t t = 1; t < states.size(); ++t) {
      xs.push_back(&states[t - 1]);
      ys.push_back(&states[t]);
    }
    m.dyn_a = least_squares_map(xs, ys, "the dynamics matrix A");
  }
  {
    std::vector<const Vector*> xs, ys;
    for (std::size_t t = 0; t < states.size(); ++t) {
      xs.push_back(&states[t]);
      ys.push_back(&observations[t]);
    }
    m.meas_b = least_squares_map(xs, ys, "the measurement matrix B");
  }

  std::vector<Vector> dyn_resid;
  for (std::size_t t = 1; t < states.size(); ++t) {
    Vector pred = kernels::matvec(m.dyn_a, states[t - 1]);
    dyn_resid.push_back(linalg::subtract(states[t], pred));
  }
  m.q_cov = residual_covariance(dyn_resid);

  std::vector<Vector> meas_resid;
  for (std::size_t t = 0; t < states.size(); ++t) {
    Vector pred = kernels::matvec(m.meas_b, states[t]);
    meas_resid.push_back(linalg::subtract(observations[t], pred));
  }
  m.r_cov = residual_covariance(meas_resid);
  return m;
}

KalmanBelief kalman_step(const KalmanModel& model, const KalmanBelief& belief,
                         const Vector& y_t) {
  model.validate();
  require(belief.mean.size() == model.state_dim(), "kalman_step: belief dim mismatch");
  require(y_t.size() == model.obs_dim(), "kalman_step: observation dim mismatch");

  const Matrix& a = model.dyn_a;
  const Matrix& b = model.meas_b;

  // predict
  Vector mean = kernels::matvec(a, belief.mean);
  Matrix cov = linalg::add(kernels::matmul(kernels::matmul(a, belief.cov), transpose(a)),
                           model.q_cov);

  // update
  const Matrix bt = transpose(b);
  Matrix innov_cov = linalg::add(kernels::matmul(kernels::matmul(b, cov), bt), model.r_cov);
  Matrix gain;  // state x obs
  try {
    // K = P B^T S^{-1}  =>  S^T K^T = (P B^T)^T; S symmetric.
    gain = transpose(linalg::solve_multi(innov_cov, transpose(kernels::matmul(cov, bt))));
  } catch (const std::runtime_error&) {
    throw std::runtime_error("kalman_step: innovation covariance is singular");
  }

  Vector innovation = linalg::subtract(y_t, kernels::matvec(b, mean));
  mean = linalg::add(mean, kernels::matvec(gain, innovation));

  // Joseph form keeps the posterior covariance PSD.
  Matrix ikb = linalg::subtract(Matrix::identity(model.state_dim()), kernels::matmul(gain, b));
  Matrix post = linalg::add(
      kernels::matmul(kernels::matmul(ikb, cov), transpose(ikb)),
      kernels::matmul(kernels::matmul(gain, model.r_cov), transpose(gain)));
  for (std::size_t i = 0; i < post.rows(); ++i)
    for (std::size_t j = i + 1; j < post.cols(); ++j) {
      const double s = 0.5 * (post(i, j) + post(j, i));
      post(i, j) = s;
      post(j, i) = s;
    }
  return {std::move(mean), std::move(post)};
}

Checkpoint to_checkpoint(const KalmanModel& model) {
  Checkpoint ckpt;
  ckpt.add("kalman.dyn_a", "matrix", model.dyn_a);
  ckpt.add("kalman.meas_b", "matrix", model.meas_b);
  ckpt.add("kalman.q_cov", "covariance", model.q_cov);
  ckpt.add("kalman.r_cov", "covariance", model.r_cov);
  return ckpt;
}

KalmanModel kalman_from_checkpoint(const Checkpoint& ckpt) {
  KalmanModel m;
  m.dyn_a = ckpt.at("kalman.dyn_a").value;
  m.meas_b = ckpt.at("kalman.meas_b").value;
  m.q_cov = ckpt.at("kalman.q_cov").value;
  m.r_cov = ckpt.at("kalman.r_cov").value;
  m.validate();
  return m;
}

}  // namespace bbci::codec
