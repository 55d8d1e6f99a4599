#pragma once

#include <cstddef>
#include <vector>

#include "robustkf/matrix.hpp"
#include "robustkf/rng.hpp"

namespace robustkf {

/// Linear Gaussian state-space model
///   x(k) = F x(k−1) + q(k−1),   y(k) = H x(k) + r(k),
/// with Cov[q] = Q and Cov[r] = R.
struct StateSpaceModel {
  Matrix F;
  Matrix H;
  Matrix Q;
  Matrix R;

  std::size_t state_dim() const noexcept { return F.rows(); }
  std::size_t measurement_dim() const noexcept { return H.rows(); }
};

/// State estimate and its covariance at one time step.
struct GaussianBelief {
  Vector mean;
  Matrix cov;
};

struct NoiseComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Per-coordinate Gaussian mixture; coordinates are independent.
struct MixtureNoiseSpec {
  std::vector<std::vector<NoiseComponent>> coordinates;

  std::size_t dim() const noexcept { return coordinates.size(); }

  /// Every coordinate N(mean, variance).
  static MixtureNoiseSpec gaussian(std::size_t dim, double variance, double mean = 0.0);
  /// Every coordinate (1−p)·N(0, nominal) + p·N(0, outlier).
  static MixtureNoiseSpec contaminated(std::size_t dim, double nominal_variance,
                                       double outlier_weight, double outlier_variance);
  /// Point mass at zero in every coordinate.
  static MixtureNoiseSpec none(std::size_t dim) { return gaussian(dim, 0.0); }

  /// Analytic per-coordinate mean and variance of the mixture.
  Vector mean() const;
  Vector variance() const;
};

/// Throws DimensionMismatch, NotSymmetric, NotPositiveDefinite (R) or NotPSD (Q).
void validate_model(const StateSpaceModel& model);

/// Throws InvalidConfig if weights do not sum to 1 within 1e-12 or a variance is negative.
void validate_noise(const MixtureNoiseSpec& spec);

/// One draw per coordinate: a uniform picks the component, then a Gaussian
/// draw from it. Always consumes three uniforms per coordinate.
Vector sample_mixture(const MixtureNoiseSpec& spec, RandomStream& rng);

struct TruthStep {
  Vector x_next;
  Vector y;
};

/// x_next = F·x + q,  y = H·x_next + r.
TruthStep propagate_truth(const StateSpaceModel& model, const Vector& x,
                          const MixtureNoiseSpec& q_spec, const MixtureNoiseSpec& r_spec,
                          RandomStream& rng);

}  // namespace robustkf
