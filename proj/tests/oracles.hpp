// Test-only oracles, independent of the implementation paths they check.
#pragma once

#include <vector>

#include "bbci/codec/kalman.hpp"
#include "bbci/core/kernels.hpp"
#include "bbci/core/linalg.hpp"
#include "bbci/core/rng.hpp"

namespace bbci::oracles {

// Posterior over the final state of a linear-Gaussian chain by batch
// joint-Gaussian conditioning. Builds the stacked linear map from
// u = [x0; n_1..n_T; m_1..m_T] to (x_T, y_1..y_T), forms the joint
// covariance explicitly, and conditions on the stacked observations.
// No recursion, no gain, no Joseph form: a completely different route
// from the sequential filter.
inline codec::KalmanBelief batch_conditioned_posterior(const codec::KalmanModel& model,
                                                       const codec::KalmanBelief& prior,
                                                       const std::vector<Vector>& ys) {
  using linalg::transpose;
  const std::size_t dx = model.state_dim();
  const std::size_t dy = model.obs_dim();
  const std::size_t steps = ys.size();
  const std::size_t du = dx + steps * dx + steps * dy;  // x0, n_t, m_t

  // index helpers into u
  const auto n_off = [&](std::size_t t) { return dx + t * dx; };          // n_{t+1}
  const auto m_off = [&](std::size_t t) { return dx + steps * dx + t * dy; };  // m_{t+1}

  // F_t: u -> x_t (built incrementally), x_t = A x_{t-1} + n_t
  Matrix f(dx, du);  // starts as x_0 = identity on the first block
  for (std::size_t i = 0; i < dx; ++i) f(i, i) = 1.0;

  // G: u -> stacked y, y_t = B x_t + m_t
  Matrix g(steps * dy, du);

  for (std::size_t t = 0; t < steps; ++t) {
    Matrix next = kernels::matmul(model.dyn_a, f);
    for (std::size_t i = 0; i < dx; ++i) next(i, n_off(t) + i) += 1.0;
    f = std::move(next);
    const Matrix bf = kernels::matmul(model.meas_b, f);
    for (std::size_t i = 0; i < dy; ++i) {
      for (std::size_t j = 0; j < du; ++j) g(t * dy + i, j) = bf(i, j);
      g(t * dy + i, m_off(t) + i) += 1.0;
    }
  }

  // cov(u) is block diagonal: prior.cov, then Q blocks, then R blocks
  Matrix su(du, du);
  for (std::size_t i = 0; i < dx; ++i)
    for (std::size_t j = 0; j < dx; ++j) su(i, j) = prior.cov(i, j);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < dx; ++i)
      for (std::size_t j = 0; j < dx; ++j) su(n_off(t) + i, n_off(t) + j) = model.q_cov(i, j);
    for (std::size_t i = 0; i < dy; ++i)
      for (std::size_t j = 0; j < dy; ++j) su(m_off(t) + i, m_off(t) + j) = model.r_cov(i, j);
  }

  // mean(u) = [prior.mean; 0; 0]
  Vector mu(du, 0.0);
  for (std::size_t i = 0; i < dx; ++i) mu[i] = prior.mean[i];

  const Matrix sxx = kernels::matmul(kernels::matmul(f, su), transpose(f));
  const Matrix sxy = kernels::matmul(kernels::matmul(f, su), transpose(g));
  const Matrix syy = kernels::matmul(kernels::matmul(g, su), transpose(g));

  Vector mean_x = kernels::matvec(f, mu);
  Vector mean_y = kernels::matvec(g, mu);
  Vector y_stacked(steps * dy);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < dy; ++i) y_stacked[t * dy + i] = ys[t][i];

  // posterior = N(mean_x + Sxy Syy^{-1} (y - mean_y), Sxx - Sxy Syy^{-1} Syx)
  const Matrix syy_inv_syx = linalg::solve_multi(syy, transpose(sxy));
  const Vector innov = linalg::subtract(y_stacked, mean_y);
  const Vector gain_innov = kernels::matvec(transpose(syy_inv_syx), innov);

  codec::KalmanBelief post;
  post.mean = linalg::add(mean_x, gain_innov);
  post.cov = linalg::subtract(sxx, kernels::matmul(sxy, syy_inv_syx));
  return post;
}

// Random symmetric positive-definite matrix M M^T + eps I.
inline Matrix random_spd(std::size_t n, Rng& rng, double eps = 0.1) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  Matrix spd = kernels::matmul(m, linalg::transpose(m));
  for (std::size_t i = 0; i < n; ++i) spd(i, i) += eps;
  return spd;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// Random stable dynamics matrix (spectral radius kept below 1 by scaling).
inline Matrix random_stable_dynamics(std::size_t n, Rng& rng) {
  Matrix a = random_matrix(n, n, rng, -0.5, 0.5);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 0.4;
  return a;
}

}  // namespace bbci::oracles
