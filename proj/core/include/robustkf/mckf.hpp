#pragma once

#include <cstddef>
#include <vector>

#include "robustkf/model.hpp"

namespace robustkf {

/// Kernel weights are clamped to this floor before C̃ is inverted.
inline constexpr double kWeightFloor = 1e-12;

/// Norm used by the relative-step stop rule.
enum class StepNorm { Euclidean, L1, Max };

struct KernelConfig {
  double sigma = 2.0;
  double epsilon = 1e-6;
  int max_iterations = 100;
  StepNorm norm = StepNorm::Euclidean;

  /// Throws InvalidBandwidth (σ) or InvalidConfig (ε, iteration cap).
  void validate() const;
};

/// Whitened stacked regression D = W·x + e built from the prior and one
/// measurement, with B = blockdiag(B_p, B_r) the Cholesky factor of
/// blockdiag(P(k|k−1), R).
struct AugmentedRegression {
  Vector D;           // length n + m
  Matrix W;           // (n + m) x n
  Matrix Bp;          // lower Cholesky factor of the prior covariance
  Matrix Br;          // lower Cholesky factor of R
  Vector prior_mean;
  Vector y;
  Matrix H;

  std::size_t state_dim() const noexcept { return W.cols(); }
  std::size_t measurement_dim() const noexcept { return H.rows(); }
  std::size_t stacked_dim() const noexcept { return W.rows(); }
};

AugmentedRegression build_regression(const StateSpaceModel& model, const GaussianBelief& prior,
                                     const Vector& y);

/// e_i = d_i − w_i·x.
Vector compute_residuals(const AugmentedRegression& reg, const Vector& x);

/// Diagonals of C̃_x (state rows) and C̃_y (measurement rows).
struct WeightMatrices {
  std::vector<double> cx;
  std::vector<double> cy;
};

/// Gaussian kernel of each residual, clamped below at kWeightFloor.
WeightMatrices weight_matrices(const Vector& residuals, double sigma, std::size_t n,
                               std::size_t m);

struct RobustGain {
  Matrix gain;   // K̄, n x m
  Matrix P_bar;  // B_p C̃_x⁻¹ B_pᵀ
  Matrix R_bar;  // B_r C̃_y⁻¹ B_rᵀ
};

RobustGain robust_gain(const AugmentedRegression& reg, const WeightMatrices& weights);

/// MCC objective (1/L)·Σ G_σ(d_i − w_i·x).
double mcc_cost(const AugmentedRegression& reg, const Vector& x, double sigma);

/// One application of the fixed-point map
///   f(x) = (Σ G_σ(e_i) w_iᵀw_i)⁻¹ (Σ G_σ(e_i) w_iᵀd_i),
/// evaluated with the raw (unclamped) kernel weights.
Vector fixed_point_map(const AugmentedRegression& reg, const Vector& x, double sigma);

/// Stop-rule quantity ‖current − previous‖ / ‖previous‖; falls back to the
/// absolute step when ‖previous‖ < 1e-300.
double relative_step(const Vector& current, const Vector& previous, StepNorm norm);

struct FixedPointReport {
  int iterations = 0;
  bool converged = false;
  WeightMatrices final_weights;
  double last_relative_step = 0.0;
  /// MCC objective at x_0, x_1, …, x_t.
  std::vector<double> cost_history;
};

struct FixedPointSolution {
  Vector x;
  Matrix gain;
  FixedPointReport report;
  /// x_0 (the prior mean unless overridden), x_1, …, x_t.
  std::vector<Vector> iterates;
};

/// Kalman-gain form of the MCC fixed-point iteration. Each iteration weights
/// the residuals of the previous iterate, rebuilds K̄ and sets
///   x_t = x̂(k|k−1) + K̄·(y − H·x̂(k|k−1)).
/// Stops on the relative-step rule or at the iteration cap (converged = false).
/// Throws Diverged if an iterate is non-finite.
FixedPointSolution fixed_point_iterate(const AugmentedRegression& reg,
                                       const KernelConfig& config);
FixedPointSolution fixed_point_iterate(const AugmentedRegression& reg, const KernelConfig& config,
                                       const Vector& initial);

struct DirectSolution {
  Vector x;
  int iterations = 0;
  bool converged = false;
  std::vector<Vector> iterates;
};

/// Weighted least-squares form x ← (WᵀCW)⁻¹WᵀCD with the same weights, floor
/// and stop rule as fixed_point_iterate. Independent reference for the gain form.
DirectSolution fixed_point_direct(const AugmentedRegression& reg, const KernelConfig& config);
DirectSolution fixed_point_direct(const AugmentedRegression& reg, const KernelConfig& config,
                                  const Vector& initial);

struct MckfStep {
  GaussianBelief prior;
  GaussianBelief posterior;
  Matrix gain;
  FixedPointReport report;
};

/// Full MCKF time step: KF prediction, whitened regression, fixed-point
/// update, then the Joseph-form covariance with the final K̄ and the nominal
/// P(k|k−1) and R.
MckfStep mckf_step(const StateSpaceModel& model, const GaussianBelief& posterior_prev,
                   const Vector& y, const KernelConfig& config);

}  // namespace robustkf
