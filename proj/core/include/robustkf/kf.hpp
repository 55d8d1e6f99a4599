#pragma once

#include "robustkf/model.hpp"

namespace robustkf {

/// mean = F·x̂, cov = F·P·Fᵀ + Q (symmetrized).
GaussianBelief kf_predict(const StateSpaceModel& model, const GaussianBelief& posterior);

struct KfUpdate {
  GaussianBelief belief;
  Matrix gain;
};

/// Standard measurement update. The gain comes from an SPD solve against the
/// innovation covariance H·P·Hᵀ + R, and the covariance uses the Joseph form.
KfUpdate kf_update(const StateSpaceModel& model, const GaussianBelief& prior, const Vector& y);

/// (I − K·H)·P·(I − K·H)ᵀ + K·R·Kᵀ, symmetrized. Shared by the KF and MCKF.
Matrix joseph_covariance(const Matrix& prior_cov, const Matrix& gain, const Matrix& H,
                         const Matrix& R);

/// P·Hᵀ·(H·P·Hᵀ + R)⁻¹ without forming an explicit inverse.
Matrix kalman_gain(const Matrix& prior_cov, const Matrix& H, const Matrix& R);

}  // namespace robustkf
