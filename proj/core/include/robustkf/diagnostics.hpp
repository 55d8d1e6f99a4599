#pragma once

#include <string>

#include "robustkf/mckf.hpp"

namespace robustkf {

/// Sufficient bandwidth for the fixed-point map to be a contraction of the
/// 1-norm ball of radius beta into itself with Lipschitz constant alpha.
struct ConvergenceCertificate {
  double beta = 0.0;
  double alpha = 0.0;
  double zeta = 0.0;
  double sigma_star = 0.0;     // φ(σ*) = β
  double sigma_dagger = 0.0;   // ψ(σ†) = α
  double sigma_min = 0.0;      // max(σ*, σ†)
};

/// ζ = √n·Σ‖w_iᵀ‖₁|d_i| / λ_min[Σ w_iᵀw_i].
double zeta(const AugmentedRegression& reg);

/// φ(σ): ζ's numerator over λ_min[Σ G_σ(β‖w_i‖₁ + |d_i|)·w_iᵀw_i].
double phi_sigma(const AugmentedRegression& reg, double beta, double sigma);

/// ψ(σ) = √n·Σ(β‖w_i‖₁ + |d_i|)·‖w_i‖₁·(β‖w_iᵀw_i‖₁ + ‖w_iᵀd_i‖₁)
///        / (σ²·λ_min[Σ G_σ(β‖w_i‖₁ + |d_i|)·w_iᵀw_i]).
double psi_sigma(const AugmentedRegression& reg, double beta, double sigma);

/// Solves φ(σ*) = β and ψ(σ†) = α by a geometric grid scan over [1e-6, 1e9]
/// (40 points per decade) followed by 80 bisection steps.
/// Throws BetaTooSmall if β ≤ ζ and BracketNotFound if either root is not
/// bracketed by the grid.
ConvergenceCertificate sufficient_sigma(const AugmentedRegression& reg, double beta, double alpha);

/// Analytic n×n Jacobian of fixed_point_map at x.
Matrix jacobian_f(const AugmentedRegression& reg, const Vector& x, double sigma);

/// Flop-count polynomials for a KF step and an MCKF step with average
/// fixed-point iteration count T. The O(·) terms are left symbolic.
struct FlopCounts {
  double s_kf = 0.0;
  double s_mckf = 0.0;
  std::string kf_unspecified;    // "O(m^3)"
  std::string mckf_unspecified;  // "T*O(n^3) + 2T*O(m^3)"
};

FlopCounts flop_counts(std::size_t n, std::size_t m, double T);

}  // namespace robustkf
