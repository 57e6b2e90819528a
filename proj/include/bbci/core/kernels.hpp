#pragma once

#include "bbci/core/matrix.hpp"

namespace bbci::kernels {

// Work threshold below which the OpenMP kernels stay single-threaded.
// Desk-scale nets (16-64 units) run serially; the parallel path kicks in
// for batch workloads and the benchmark sizes.
inline constexpr std::size_t kParallelWork = 16384;

// Production kernels. Parallelism is always across independent output
// elements (rows, columns, batch items); each element is reduced serially
// by a single thread, so results are bit-identical to the serial
// reference for any thread count.
Vector matvec(const Matrix& w, const Vector& x);            // w * x
Vector matvec_transpose(const Matrix& w, const Vector& x);  // w^T * x
Matrix matmul(const Matrix& a, const Matrix& b);
void add_outer(Matrix& acc, const Vector& a, const Vector& b);  // acc += a b^T
void axpy(double alpha, const Vector& x, Vector& y);            // y += alpha x
double dot(const Vector& a, const Vector& b);
double sum_squares(const Vector& v);

// Serial reference implementations, kept for testing and benchmarking
// against the parallel path.
namespace serial {
Vector matvec(const Matrix& w, const Vector& x);
Vector matvec_transpose(const Matrix& w, const Vector& x);
Matrix matmul(const Matrix& a, const Matrix& b);
void add_outer(Matrix& acc, const Vector& a, const Vector& b);
}  // namespace serial

}  // namespace bbci::kernels
