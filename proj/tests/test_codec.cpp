#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bbci/codec/bandpower.hpp"
#include "bbci/codec/kalman.hpp"
#include "bbci/codec/lda.hpp"
#include "bbci/codec/multiclass.hpp"
#include "bbci/codec/threshold.hpp"
#include "bbci/core/kernels.hpp"
#include "bbci/core/linalg.hpp"
#include "bbci/core/rng.hpp"
#include "oracles.hpp"

using namespace bbci;
using namespace bbci::codec;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct SimData {
  std::vector<Vector> xs, ys;
};

SimData simulate_linear_gaussian(const Matrix& a, const Matrix& b, double q_std, double r_std,
                                 std::size_t steps, Rng& rng) {
  SimData d;
  Vector x(a.rows());
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (std::size_t t = 0; t < steps; ++t) {
    Vector nx = kernels::matvec(a, x);
    for (auto& v : nx) v += q_std * rng.gaussian();
    Vector y = kernels::matvec(b, nx);
    for (auto& v : y) v += r_std * rng.gaussian();
    x = nx;
    d.xs.push_back(x);
    d.ys.push_back(y);
  }
  return d;
}

}  // namespace

TEST_CASE("kalman_fit recovers the generating system exactly without noise") {
  Rng rng(21);
  const Matrix a = oracles::random_stable_dynamics(3, rng);
  const Matrix b = oracles::random_matrix(4, 3, rng);
  const SimData d = simulate_linear_gaussian(a, b, 0.0, 0.0, 60, rng);
  const KalmanModel m = kalman_fit(d.xs, d.ys);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(m.dyn_a.data()[i] == doctest::Approx(a.data()[i]).epsilon(1e-8));
  for (std::size_t i = 0; i < b.size(); ++i)
    CHECK(m.meas_b.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-8));
}

TEST_CASE("kalman_fit rejects constant (rank-deficient) states") {
  std::vector<Vector> xs(20, Vector{1.0, 1.0});
  std::vector<Vector> ys(20, Vector{2.0, 0.0, 1.0});
  CHECK_THROWS_WITH_AS(kalman_fit(xs, ys), doctest::Contains("rank-deficient"),
                       std::runtime_error);
}

TEST_CASE("kalman_fit residual covariances are consistent at 10k samples") {
  Rng rng(22);
  const Matrix a = oracles::random_stable_dynamics(2, rng);
  const Matrix b = oracles::random_matrix(3, 2, rng);
  const double q_std = 0.3, r_std = 0.5;
  const SimData d = simulate_linear_gaussian(a, b, q_std, r_std, 10000, rng);
  const KalmanModel m = kalman_fit(d.xs, d.ys);

  // generating covariances are diagonal q_std^2 / r_std^2
  double q_err = 0.0, q_norm = 0.0, r_err = 0.0, r_norm = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const double target = i == j ? q_std * q_std : 0.0;
      q_err += (m.q_cov(i, j) - target) * (m.q_cov(i, j) - target);
      q_norm += target * target;
    }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double target = i == j ? r_std * r_std : 0.0;
      r_err += (m.r_cov(i, j) - target) * (m.r_cov(i, j) - target);
      r_norm += target * target;
    }
  CHECK(std::sqrt(q_err / q_norm) < 0.2);
  CHECK(std::sqrt(r_err / r_norm) < 0.2);
}

TEST_CASE("noiseless measurement with square B forces the posterior onto B^{-1} y") {
  Rng rng(23);
  KalmanModel m;
  m.dyn_a = Matrix::identity(2);
  m.meas_b = Matrix(2, 2);
  m.meas_b(0, 0) = 2.0;
  m.meas_b(0, 1) = 0.5;
  m.meas_b(1, 0) = -1.0;
  m.meas_b(1, 1) = 1.5;
  m.q_cov = Matrix(2, 2);
  m.r_cov = Matrix(2, 2);  // exactly zero measurement noise
  KalmanBelief belief{Vector{0.0, 0.0}, Matrix::identity(2)};
  const Vector y{1.0, -2.0};
  const KalmanBelief post = kalman_step(m, belief, y);
  const Vector expect = linalg::solve(m.meas_b, y);
  CHECK(post.mean[0] == doctest::Approx(expect[0]).epsilon(1e-8));
  CHECK(post.mean[1] == doctest::Approx(expect[1]).epsilon(1e-8));
}

TEST_CASE("posterior covariance trace is non-increasing under repeated identical updates") {
  KalmanModel m;
  m.dyn_a = Matrix::identity(2);
  m.meas_b = Matrix::identity(2);
  m.q_cov = Matrix(2, 2);  // no process noise
  m.r_cov = linalg::scale(Matrix::identity(2), 0.5);
  KalmanBelief belief{Vector{0.0, 0.0}, Matrix::identity(2)};
  double prev_trace = 2.0;
  for (int i = 0; i < 10; ++i) {
    belief = kalman_step(m, belief, Vector{1.0, 1.0});
    const double trace = belief.cov(0, 0) + belief.cov(1, 1);
    CHECK(trace <= prev_trace + 1e-12);
    prev_trace = trace;
  }
}

TEST_CASE("sequential filter matches the batch joint-Gaussian conditioning oracle") {
  Rng rng(24);
  for (int rep = 0; rep < 3; ++rep) {
    const std::size_t dx = 2 + rep;
    const std::size_t dy = 3;
    KalmanModel m;
    m.dyn_a = oracles::random_stable_dynamics(dx, rng);
    m.meas_b = oracles::random_matrix(dy, dx, rng);
    m.q_cov = oracles::random_spd(dx, rng, 0.05);
    m.r_cov = oracles::random_spd(dy, rng, 0.05);

    KalmanBelief belief{Vector(dx, 0.0), oracles::random_spd(dx, rng, 0.2)};
    for (auto& v : belief.mean) v = rng.uniform(-1.0, 1.0);
    const KalmanBelief prior = belief;

    std::vector<Vector> ys;
    for (int t = 0; t < 5; ++t) {
      Vector y(dy);
      for (auto& v : y) v = rng.uniform(-2.0, 2.0);
      ys.push_back(y);
      belief = kalman_step(m, belief, y);
    }
    const KalmanBelief oracle = oracles::batch_conditioned_posterior(m, prior, ys);
    for (std::size_t i = 0; i < dx; ++i)
      CHECK(std::abs(belief.mean[i] - oracle.mean[i]) < 1e-8);
    for (std::size_t i = 0; i < dx; ++i)
      for (std::size_t j = 0; j < dx; ++j)
        CHECK(std::abs(belief.cov(i, j) - oracle.cov(i, j)) < 1e-8);
  }
}

TEST_CASE("kalman_step keeps the covariance symmetric positive semi-definite") {
  Rng rng(25);
  KalmanModel m;
  m.dyn_a = oracles::random_stable_dynamics(3, rng);
  m.meas_b = oracles::random_matrix(2, 3, rng);
  m.q_cov = oracles::random_spd(3, rng, 0.01);
  m.r_cov = oracles::random_spd(2, rng, 0.01);
  KalmanBelief belief{Vector(3, 0.0), oracles::random_spd(3, rng)};
  for (int t = 0; t < 30; ++t) {
    Vector y(2);
    for (auto& v : y) v = rng.uniform(-3.0, 3.0);
    belief = kalman_step(m, belief, y);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(belief.cov(i, j) == belief.cov(j, i));
    const Vector eig = linalg::symmetric_eigenvalues(belief.cov);
    for (double e : eig) CHECK(e >= -1e-10);
  }
}

TEST_CASE("singular innovation covariance is reported") {
  KalmanModel m;
  m.dyn_a = Matrix::identity(2);
  m.meas_b = Matrix(2, 2);  // all-zero measurement matrix
  m.q_cov = Matrix(2, 2);
  m.r_cov = Matrix(2, 2);
  KalmanBelief belief{Vector(2, 0.0), Matrix::identity(2)};
  CHECK_THROWS_WITH_AS(kalman_step(m, belief, Vector(2, 1.0)),
                       doctest::Contains("innovation"), std::runtime_error);
}

TEST_CASE("LDA closed form: identity covariance points along the mean difference") {
  Rng rng(26);
  Matrix features(400, 2);
  std::vector<int> labels(400);
  for (std::size_t i = 0; i < 400; ++i) {
    const bool cls = i >= 200;
    labels[i] = cls ? 1 : 0;
    features(i, 0) = (cls ? 5.0 : 0.0) + rng.gaussian();
    features(i, 1) = (cls ? 5.0 : 0.0) + rng.gaussian();
  }
  const LdaModel m = lda_fit(features, labels);
  const double norm = std::hypot(m.weight[0], m.weight[1]);
  CHECK(std::abs(m.weight[0] / norm - 1.0 / std::sqrt(2.0)) < 0.05);
  CHECK(std::abs(m.weight[1] / norm - 1.0 / std::sqrt(2.0)) < 0.05);
}

TEST_CASE("LDA with exactly identical class means collapses to zero weight") {
  Matrix features(8, 2);
  std::vector<int> labels(8);
  // the same four points carry both labels: identical sample means
  const double pts[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  for (std::size_t i = 0; i < 8; ++i) {
    features(i, 0) = pts[i % 4][0];
    features(i, 1) = pts[i % 4][1];
    labels[i] = i < 4 ? 0 : 1;
  }
  const LdaModel m = lda_fit(features, labels);
  CHECK(std::hypot(m.weight[0], m.weight[1]) < 1e-6);
}

TEST_CASE("LDA rejects single-class input") {
  Matrix features(4, 2, 1.0);
  CHECK_THROWS_AS(lda_fit(features, std::vector<int>{0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("LDA reaches 95% held-out accuracy on 4-sigma separated gait classes") {
  Rng rng(27);
  const double sep = 4.0;
  auto draw = [&](bool cls) {
    Vector v(3);
    for (std::size_t j = 0; j < 3; ++j)
      v[j] = (cls ? sep / std::sqrt(3.0) : 0.0) + rng.gaussian();
    return v;
  };
  Matrix train(500, 3);
  std::vector<int> labels(500);
  for (std::size_t i = 0; i < 500; ++i) {
    labels[i] = i % 2;
    const Vector v = draw(labels[i] == 1);
    for (std::size_t j = 0; j < 3; ++j) train(i, j) = v[j];
  }
  const LdaModel m = lda_fit(train, labels);
  std::size_t correct = 0;
  const std::size_t n_test = 1000;
  for (std::size_t i = 0; i < n_test; ++i) {
    const int cls = static_cast<int>(i % 2);
    if (m.predict(draw(cls == 1)) == cls) ++correct;
  }
  CHECK(static_cast<double>(correct) / n_test >= 0.95);
}

TEST_CASE("LDA decisions are invariant under a common invertible affine transform") {
  Rng rng(28);
  Matrix train(300, 3);
  std::vector<int> labels(300);
  for (std::size_t i = 0; i < 300; ++i) {
    labels[i] = i % 2;
    for (std::size_t j = 0; j < 3; ++j)
      train(i, j) = (labels[i] ? 2.5 : 0.0) + rng.gaussian();
  }
  Matrix test(200, 3);
  for (std::size_t i = 0; i < test.size(); ++i) test.data()[i] = rng.uniform(-1.0, 4.0);

  const LdaModel base = lda_fit(train, labels);

  for (int rep = 0; rep < 5; ++rep) {
    // well-conditioned random affine map
    Matrix t = Matrix::identity(3);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.4, 0.4);
    const Vector shift{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};

    auto apply = [&](const Vector& x) {
      Vector y = kernels::matvec(t, x);
      for (std::size_t j = 0; j < 3; ++j) y[j] += shift[j];
      return y;
    };
    Matrix train_t(300, 3);
    for (std::size_t i = 0; i < 300; ++i) {
      const Vector y = apply(train.row(i));
      for (std::size_t j = 0; j < 3; ++j) train_t(i, j) = y[j];
    }
    const LdaModel mapped = lda_fit(train_t, labels);
    for (std::size_t i = 0; i < 200; ++i) {
      const Vector x = test.row(i);
      CHECK(base.predict(x) == mapped.predict(apply(x)));
    }
  }
}

TEST_CASE("multiclass: hexagon clusters reach 95% held-out accuracy") {
  Rng rng(29);
  const double radius = 4.0;
  auto draw = [&](std::size_t cls) {
    Vector v(2);
    v[0] = radius * std::cos(kTwoPi * cls / 6.0) + rng.gaussian();
    v[1] = radius * std::sin(kTwoPi * cls / 6.0) + rng.gaussian();
    return v;
  };
  Matrix train(600, 2);
  std::vector<std::size_t> labels(600);
  for (std::size_t i = 0; i < 600; ++i) {
    labels[i] = i % 6;
    const Vector v = draw(labels[i]);
    train(i, 0) = v[0];
    train(i, 1) = v[1];
  }
  const MulticlassModel m = multiclass_fit(train, labels, 6);
  std::size_t correct = 0;
  const std::size_t n_test = 1200;
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::size_t cls = i % 6;
    if (m.predict(draw(cls)) == cls) ++correct;
  }
  CHECK(static_cast<double>(correct) / n_test >= 0.95);
}

TEST_CASE("multiclass argmax semantics") {
  CHECK(argmax({0.1, 0.9, 0.2, 0.0, 0.3, 0.4}) == 1);
  // positive scaling and constant shifts keep the argmax
  Vector scores{0.1, 0.9, 0.2, 0.0, 0.3, 0.4};
  Vector scaled = scores, shifted = scores;
  for (auto& s : scaled) s *= 3.7;
  for (auto& s : shifted) s += 11.0;
  CHECK(argmax(scaled) == argmax(scores));
  CHECK(argmax(shifted) == argmax(scores));
}

TEST_CASE("multiclass_fit requires every class present") {
  Matrix features(4, 2, 1.0);
  std::vector<std::size_t> labels{0, 1, 1, 0};
  CHECK_THROWS_WITH_AS(multiclass_fit(features, labels, 3), doctest::Contains("class 2"),
                       std::invalid_argument);
}

TEST_CASE("rate threshold law") {
  // below threshold and at the boundary: zero output
  const Vector flat = rate_threshold_decode(Vector{0.0, 10.0, 23.9, 24.0}, 24.0, 0.8);
  for (double v : flat) CHECK(v == 0.0);
  // the flexor-law shape: rate 30, threshold 24, gain 0.8 -> 4.8
  const Vector out = rate_threshold_decode(Vector{30.0}, 24.0, 0.8);
  CHECK(out[0] == doctest::Approx(0.8 * 6.0).epsilon(1e-15));
  CHECK_THROWS_AS(rate_threshold_decode(Vector{1.0}, 0.0, -0.1), std::invalid_argument);
}

TEST_CASE("band power of a pure on-bin sinusoid matches the analytic value") {
  // unit sinusoid at an exact DFT bin: one-sided normalized power 0.5
  const double fs = 200.0;
  const std::size_t n = 40;  // 200 ms window, 10 Hz = bin 2
  Vector sig(n);
  for (std::size_t i = 0; i < n; ++i) sig[i] = std::sin(kTwoPi * 10.0 * i / fs);
  const double p = band_power(sig, fs, 8.0, 12.0);
  CHECK(p == doctest::Approx(0.5).epsilon(1e-9));
  // out-of-band request sees nothing
  CHECK(band_power(sig, fs, 30.0, 50.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("band power trigger fires after an amplitude drop, not before") {
  const double fs = 200.0;
  Vector sig(static_cast<std::size_t>(4 * fs));
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    const double amp = t < 2.0 ? 1.0 : 0.5;  // power falls 4x mid-signal
    sig[i] = amp * std::sin(kTwoPi * 10.0 * t);
  }
  const auto res = band_power_trigger(sig, fs, 8.0, 12.0, 400.0, 0.5);
  REQUIRE(!res.trigger_indices.empty());
  for (std::size_t idx : res.trigger_indices)
    CHECK(res.windows[idx].start_ms >= 2000.0);
  // the first post-drop window fires
  CHECK(res.windows[5].triggered);
}

TEST_CASE("band power trigger stays silent on constant and stationary signals") {
  const double fs = 200.0;
  Vector constant(static_cast<std::size_t>(4 * fs), 0.7);
  const auto res_const = band_power_trigger(constant, fs, 8.0, 12.0, 400.0, 0.5);
  CHECK(res_const.trigger_indices.empty());

  Vector steady(static_cast<std::size_t>(4 * fs));
  for (std::size_t i = 0; i < steady.size(); ++i)
    steady[i] = std::sin(kTwoPi * 10.0 * i / fs);
  const auto res_steady = band_power_trigger(steady, fs, 8.0, 12.0, 400.0, 0.5);
  CHECK(res_steady.trigger_indices.empty());
}

TEST_CASE("band power trigger validates the window and band") {
  Vector sig(800, 0.0);
  // window shorter than 2 cycles of the low edge
  CHECK_THROWS_WITH_AS(band_power_trigger(sig, 200.0, 10.0, 12.0, 100.0, 0.5),
                       doctest::Contains("degenerate"), std::invalid_argument);
  CHECK_THROWS_AS(band_power_trigger(sig, 200.0, 0.0, 12.0, 400.0, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(band_power_trigger(sig, 200.0, 50.0, 120.0, 400.0, 0.5),
                  std::invalid_argument);
}
