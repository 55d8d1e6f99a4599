#pragma once

#include "robustkf/matrix.hpp"

namespace robustkf {

/// Relative tolerance used by every symmetry check.
inline constexpr double kSymmetryTolerance = 1e-10;

/// Throws NotSymmetric unless |A_ij − A_ji| ≤ 1e-10·(1 + ‖A‖_max).
void require_symmetric(const Matrix& a, const char* what);

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// The input is symmetrized first. If a pivot is non-positive the factorization
/// is retried once on A + δI with δ = 1e-12·max(1, ‖A‖_max); a second failure
/// raises NotPositiveDefinite. Use `allow_jitter = false` for strict checks.
Matrix cholesky_lower(const Matrix& a, bool allow_jitter = true);

/// Solves L·X = B for lower-triangular L.
Matrix solve_lower(const Matrix& lower, const Matrix& b);
Vector solve_lower(const Matrix& lower, const Vector& b);
/// Solves Lᵀ·X = B for lower-triangular L.
Matrix solve_lower_transpose(const Matrix& lower, const Matrix& b);
Vector solve_lower_transpose(const Matrix& lower, const Vector& b);

/// X with A·X = B for symmetric positive definite A (via Cholesky).
Matrix solve_spd(const Matrix& a, const Matrix& b);
Vector solve_spd(const Matrix& a, const Vector& b);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column j is the eigenvector of values[j]
};

/// Cyclic Jacobi eigendecomposition of the symmetrized input.
SymmetricEigen eigen_symmetric(const Matrix& a);

double min_eigenvalue_symmetric(const Matrix& a);

/// max_j Σ_i |A_ij|, the operator norm induced by the vector 1-norm.
double induced_l1_norm(const Matrix& a);

}  // namespace robustkf
