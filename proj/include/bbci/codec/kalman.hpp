#pragma once

#include "bbci/core/checkpoint.hpp"
#include "bbci/core/matrix.hpp"

namespace bbci::codec {

// Linear-Gaussian kinematic filter: x_t = A x_{t-1} + n_t (dynamics),
// y_t = B x_t + m_t (measurement).
struct KalmanModel {
  Matrix dyn_a;   // state x state
  Matrix meas_b;  // obs x state
  Matrix q_cov;   // dynamics noise covariance
  Matrix r_cov;   // measurement noise covariance

  std::size_t state_dim() const { return dyn_a.rows(); }
  std::size_t obs_dim() const { return meas_b.rows(); }
  void validate() const;
};

struct KalmanBelief {
  Vector mean;
  Matrix cov;
};

// Least-squares fit of (A, B) and residual covariances (Q, R) from paired
// state/observation sequences. Throws on rank-deficient regressors.
KalmanModel kalman_fit(const std::vector<Vector>& states,
                       const std::vector<Vector>& observations);

// One predict + update cycle; posterior covariance is formed in Joseph
// form and symmetrized. Throws when the innovation covariance is
// singular.
KalmanBelief kalman_step(const KalmanModel& model, const KalmanBelief& belief,
                         const Vector& y_t);

Checkpoint to_checkpoint(const KalmanModel& model);
KalmanModel kalman_from_checkpoint(const Checkpoint& ckpt);

}  // namespace bbci::codec
