#include "robustkf/kf.hpp"

#include "robustkf/error.hpp"
#include "robustkf/linalg.hpp"

namespace robustkf {

namespace {

void check_belief(const StateSpaceModel& model, const GaussianBelief& belief) {
  const std::size_t n = model.state_dim();
  if (belief.mean.size() != n || belief.cov.rows() != n || belief.cov.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "belief does not match the model state dimension");
  }
}

}  // namespace

GaussianBelief kf_predict(const StateSpaceModel& model, const GaussianBelief& posterior) {
  check_belief(model, posterior);
  GaussianBelief prior;
  prior.mean = model.F * posterior.mean;
  prior.cov = symmetrized(model.F * posterior.cov * model.F.transpose() + model.Q);
  return prior;
}

Matrix kalman_gain(const Matrix& prior_cov, const Matrix& H, const Matrix& R) {
  const Matrix pht = prior_cov * H.transpose();
  const Matrix innovation_cov = symmetrized(H * pht + R);
  // K = P Hᵀ S⁻¹  ⇔  S Kᵀ = H P  (S and P symmetric).
  return solve_spd(innovation_cov, pht.transpose()).transpose();
}

Matrix joseph_covariance(const Matrix& prior_cov, const Matrix& gain, const Matrix& H,
                         const Matrix& R) {
  const Matrix ikh = Matrix::identity(prior_cov.rows()) - gain * H;
  return symmetrized(ikh * prior_cov * ikh.transpose() + gain * R * gain.transpose());
}

KfUpdate kf_update(const StateSpaceModel& model, const GaussianBelief& prior, const Vector& y) {
  check_belief(model, prior);
  if (y.size() != model.measurement_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "measurement dimension mismatch");
  }
  KfUpdate out;
  out.gain = kalman_gain(prior.cov, model.H, model.R);
  const Vector innovation = y - model.H * prior.mean;
  out.belief.mean = prior.mean + out.gain * innovation;
  out.belief.cov = joseph_covariance(prior.cov, out.gain, model.H, model.R);
  return out;
}

}  // namespace robustkf
