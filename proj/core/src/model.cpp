#include "robustkf/model.hpp"

#include <cmath>
#include <string>

#include "robustkf/error.hpp"
#include "robustkf/linalg.hpp"

namespace robustkf {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

MixtureNoiseSpec MixtureNoiseSpec::gaussian(std::size_t dim, double variance, double mean) {
  MixtureNoiseSpec spec;
  spec.coordinates.assign(dim, {NoiseComponent{1.0, mean, variance}});
  return spec;
}

MixtureNoiseSpec MixtureNoiseSpec::contaminated(std::size_t dim, double nominal_variance,
                                                double outlier_weight, double outlier_variance) {
  MixtureNoiseSpec spec;
  spec.coordinates.assign(dim, {NoiseComponent{1.0 - outlier_weight, 0.0, nominal_variance},
                                NoiseComponent{outlier_weight, 0.0, outlier_variance}});
  return spec;
}

Vector MixtureNoiseSpec::mean() const {
  Vector out(dim());
  for (std::size_t i = 0; i < dim(); ++i)
    for (const auto& c : coordinates[i]) out[i] += c.weight * c.mean;
  return out;
}

Vector MixtureNoiseSpec::variance() const {
  const Vector mu = mean();
  Vector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    // Law of total variance.
    for (const auto& c : coordinates[i]) {
      const double shift = c.mean - mu[i];
      out[i] += c.weight * (c.variance + shift * shift);
    }
  }
  return out;
}

void validate_model(const StateSpaceModel& model) {
  const auto& [F, H, Q, R] = model;
  if (F.empty() || !F.is_square()) {
    throw Error(ErrorCode::DimensionMismatch, "F must be square, got " + shape(F));
  }
  const std::size_t n = F.rows();
  if (H.rows() == 0 || H.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "H must be m x " + std::to_string(n) + ", got " + shape(H));
  }
  const std::size_t m = H.rows();
  if (Q.rows() != n || Q.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "Q must be n x n, got " + shape(Q));
  }
  if (R.rows() != m || R.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "R must be m x m, got " + shape(R));
  }
  for (const Matrix* mat : {&F, &H, &Q, &R}) {
    if (!mat->all_finite()) throw Error(ErrorCode::NonFiniteInput, "model has non-finite entries");
  }
  require_symmetric(Q, "Q");
  require_symmetric(R, "R");
  cholesky_lower(R, /*allow_jitter=*/false);
  if (min_eigenvalue_symmetric(Q) < -kSymmetryTolerance * Q.max_abs()) {
    throw Error(ErrorCode::NotPSD, "Q is not positive semidefinite");
  }
}

void validate_noise(const MixtureNoiseSpec& spec) {
  for (const auto& coord : spec.coordinates) {
    if (coord.empty()) throw Error(ErrorCode::InvalidConfig, "noise coordinate has no components");
    double total = 0.0;
    for (const auto& c : coord) {
      if (!(c.weight >= 0.0) || !(c.variance >= 0.0) || !std::isfinite(c.mean) ||
          !std::isfinite(c.variance)) {
        throw Error(ErrorCode::InvalidConfig, "noise component has invalid weight or variance");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorCode::InvalidConfig, "noise component weights do not sum to 1");
    }
  }
}

Vector sample_mixture(const MixtureNoiseSpec& spec, RandomStream& rng) {
  Vector out(spec.dim());
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    const auto& coord = spec.coordinates[i];
    const double u = rng.uniform();
    std::size_t pick = coord.size() - 1;
    double cumulative = 0.0;
    for (std::size_t c = 0; c < coord.size(); ++c) {
      cumulative += coord[c].weight;
      if (u < cumulative) {
        pick = c;
        break;
      }
    }
    out[i] = rng.normal(coord[pick].mean, coord[pick].variance);
  }
  return out;
}

TruthStep propagate_truth(const StateSpaceModel& model, const Vector& x,
                          const MixtureNoiseSpec& q_spec, const MixtureNoiseSpec& r_spec,
                          RandomStream& rng) {
  if (x.size() != model.state_dim() || q_spec.dim() != model.state_dim() ||
      r_spec.dim() != model.measurement_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "propagate_truth: inconsistent dimensions");
  }
  TruthStep step;
  step.x_next = model.F * x + sample_mixture(q_spec, rng);
  step.y = model.H * step.x_next + sample_mixture(r_spec, rng);
  return step;
}

}  // namespace robustkf
