#pragma once

#include "bbci/core/matrix.hpp"

namespace bbci::linalg {

Matrix transpose(const Matrix& a);

// Gaussian elimination with partial pivoting. Throws std::runtime_error
// naming the deficiency when the system is singular to working precision.
Vector solve(Matrix a, Vector b);
Matrix solve_multi(Matrix a, Matrix b);  // A X = B
Matrix inverse(const Matrix& a);

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
// ascending order. Small matrices only.
Vector symmetric_eigenvalues(Matrix a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Vector add(const Vector& a, const Vector& b);
Vector subtract(const Vector& a, const Vector& b);
Vector scale(const Vector& a, double s);

}  // namespace bbci::linalg
