#include "bbci/core/kernels.hpp"

#include <cstdint>

namespace bbci::kernels {

namespace {

void check_matvec(const Matrix& w, const Vector& x, const char* who) {
  if (w.cols() != x.size())
    throw std::invalid_argument(std::string(who) + ": matrix cols " +
                                std::to_string(w.cols()) + " != vector size " +
                                std::to_string(x.size()));
}

}  // namespace

namespace serial {

Vector matvec(const Matrix& w, const Vector& x) {
  check_matvec(w, x, "matvec");
  Vector y(w.rows(), 0.0);
  const double* wd = w.data();
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double acc = 0.0;
    const double* row = wd + i * w.cols();
    for (std::size_t j = 0; j < w.cols(); ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_transpose(const Matrix& w, const Vector& x) {
  if (w.rows() != x.size())
    throw std::invalid_argument("matvec_transpose: matrix rows " +
                                std::to_string(w.rows()) + " != vector size " +
                                std::to_string(x.size()));
  Vector y(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    const double* row = w.data() + i * w.cols();
    for (std::size_t j = 0; j < w.cols(); ++j) y[j] += xi * row[j];
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dims " + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()));
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      double* crow = c.data() + i * c.cols();
      const double* brow = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  return c;
}

void add_outer(Matrix& acc, const Vector& a, const Vector& b) {
  if (acc.rows() != a.size() || acc.cols() != b.size())
    throw std::invalid_argument("add_outer: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    double* row = acc.data() + i * acc.cols();
    for (std::size_t j = 0; j < b.size(); ++j) row[j] += ai * b[j];
  }
}

}  // namespace serial

// The parallel variants fall through to the serial bodies below the work
// threshold, so desk-scale inner loops never touch the OpenMP runtime.
// Each output row is reduced by one thread, which keeps results
// bit-identical to the serial reference at any thread count.

Vector matvec(const Matrix& w, const Vector& x) {
  if (w.size() < kParallelWork) return serial::matvec(w, x);
  check_matvec(w, x, "matvec");
  Vector y(w.rows(), 0.0);
  const double* wd = w.data();
  const std::int64_t rows = static_cast<std::int64_t>(w.rows());
  const std::size_t cols = w.cols();
#pragma omp parallel for
  for (std::int64_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* row = wd + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

Vector matvec_transpose(const Matrix& w, const Vector& x) {
  if (w.size() < kParallelWork) return serial::matvec_transpose(w, x);
  if (w.rows() != x.size())
    throw std::invalid_argument("matvec_transpose: matrix rows " +
                                std::to_string(w.rows()) + " != vector size " +
                                std::to_string(x.size()));
  Vector y(w.cols(), 0.0);
  const std::int64_t cols = static_cast<std::int64_t>(w.cols());
#pragma omp parallel for
  for (std::int64_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) acc += w(i, j) * x[i];
    y[j] = acc;
  }
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.size() + b.size() < kParallelWork) return serial::matmul(a, b);
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dims " + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()));
  Matrix c(a.rows(), b.cols());
  const std::int64_t rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      double* crow = c.data() + i * c.cols();
      const double* brow = b.data() + k * b.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

void add_outer(Matrix& acc, const Vector& a, const Vector& b) {
  if (acc.size() < kParallelWork) return serial::add_outer(acc, a, b);
  if (acc.rows() != a.size() || acc.cols() != b.size())
    throw std::invalid_argument("add_outer: shape mismatch");
  const std::int64_t rows = static_cast<std::int64_t>(a.size());
#pragma omp parallel for
  for (std::int64_t i = 0; i < rows; ++i) {
    const double ai = a[i];
    double* row = acc.data() + i * acc.cols();
    for (std::size_t j = 0; j < b.size(); ++j) row[j] += ai * b[j];
  }
}

void axpy(double alpha, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace bbci::kernels
