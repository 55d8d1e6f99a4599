#include "robustkf/mckf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustkf/correntropy.hpp"
#include "robustkf/error.hpp"
#include "robustkf/kf.hpp"
#include "robustkf/linalg.hpp"

namespace robustkf {

void KernelConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidBandwidth, "sigma must be positive, got " + std::to_string(sigma));
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::InvalidConfig, "epsilon must be positive");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max_iterations must be >= 1");
}

AugmentedRegression build_regression(const StateSpaceModel& model, const GaussianBelief& prior,
                                     const Vector& y) {
  const std::size_t n = model.state_dim();
  const std::size_t m = model.measurement_dim();
  if (prior.mean.size() != n || prior.cov.rows() != n || y.size() != m || model.H.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "build_regression: inconsistent dimensions");
  }
  AugmentedRegression reg;
  reg.Bp = cholesky_lower(prior.cov);
  reg.Br = cholesky_lower(model.R);
  reg.prior_mean = prior.mean;
  reg.y = y;
  reg.H = model.H;

  // W = [B_p⁻¹; B_r⁻¹H],  D = [B_p⁻¹x̂⁻; B_r⁻¹y], by triangular solves.
  reg.W = Matrix(n + m, n);
  reg.W.set_block(0, 0, solve_lower(reg.Bp, Matrix::identity(n)));
  reg.W.set_block(n, 0, solve_lower(reg.Br, model.H));
  const Vector dx = solve_lower(reg.Bp, prior.mean);
  const Vector dy = solve_lower(reg.Br, y);
  reg.D = Vector(n + m);
  for (std::size_t i = 0; i < n; ++i) reg.D[i] = dx[i];
  for (std::size_t i = 0; i < m; ++i) reg.D[n + i] = dy[i];
  return reg;
}

Vector compute_residuals(const AugmentedRegression& reg, const Vector& x) {
  if (x.size() != reg.state_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "compute_residuals: state dimension mismatch");
  }
  Vector e = reg.W * x;
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = reg.D[i] - e[i];
  return e;
}

WeightMatrices weight_matrices(const Vector& residuals, double sigma, std::size_t n,
                               std::size_t m) {
  if (residuals.size() != n + m) {
    throw Error(ErrorCode::DimensionMismatch, "weight_matrices: residual length must be n + m");
  }
  WeightMatrices w;
  w.cx.resize(n);
  w.cy.resize(m);
  for (std::size_t i = 0; i < n; ++i) {
    w.cx[i] = std::max(gaussian_kernel(residuals[i], sigma), kWeightFloor);
  }
  for (std::size_t i = 0; i < m; ++i) {
    w.cy[i] = std::max(gaussian_kernel(residuals[n + i], sigma), kWeightFloor);
  }
  return w;
}

namespace {

// B·diag(1/c)·Bᵀ for lower-triangular B.
Matrix scaled_outer(const Matrix& b, const std::vector<double>& c) {
  const std::size_t n = b.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= j; ++k) acc += b(i, k) * b(j, k) / c[k];
      out(i, j) = acc;
      out(j, i) = acc;
    }
  }
  return out;
}

void require_finite_iterate(const Vector& x, int iteration) {
  if (!x.all_finite()) {
    throw Error(ErrorCode::Diverged,
                "fixed-point iterate " + std::to_string(iteration) + " is not finite");
  }
}

}  // namespace

RobustGain robust_gain(const AugmentedRegression& reg, const WeightMatrices& weights) {
  if (weights.cx.size() != reg.state_dim() || weights.cy.size() != reg.measurement_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "robust_gain: weight dimensions");
  }
  RobustGain out;
  out.P_bar = scaled_outer(reg.Bp, weights.cx);
  out.R_bar = scaled_outer(reg.Br, weights.cy);

  // K̄ = P̄Hᵀ(HP̄Hᵀ + R̄)⁻¹ evaluated in whitened measurement coordinates:
  //   K̄ = P̄H̃ᵀ(C̃_y⁻¹ + H̃P̄H̃ᵀ)⁻¹B_r⁻¹ with H̃ = B_r⁻¹H.
  // Near-floor weights make R̄ itself badly conditioned; the middle factor here
  // is a diagonal plus a moderate term, which factorizes accurately.
  const std::size_t n = reg.state_dim();
  const std::size_t m = reg.measurement_dim();
  const Matrix h_white = reg.W.block(n, 0, m, n);
  const Matrix pht = out.P_bar * h_white.transpose();
  Matrix inner = h_white * pht;
  for (std::size_t i = 0; i < m; ++i) inner(i, i) += 1.0 / weights.cy[i];
  // inner·Zᵀ = H̃P̄, then K̄ = Z·B_r⁻¹ ⇔ B_rᵀK̄ᵀ = Zᵀ.
  const Matrix zt = solve_spd(symmetrized(inner), pht.transpose());
  out.gain = solve_lower_transpose(reg.Br, zt).transpose();
  return out;
}

double mcc_cost(const AugmentedRegression& reg, const Vector& x, double sigma) {
  const Vector e = compute_residuals(reg, x);
  return correntropy_estimate(e.values(), sigma);
}

Vector fixed_point_map(const AugmentedRegression& reg, const Vector& x, double sigma) {
  const std::size_t n = reg.state_dim();
  const Vector e = compute_residuals(reg, x);
  Matrix gram(n, n);
  Vector rhs(n);
  for (std::size_t i = 0; i < reg.stacked_dim(); ++i) {
    const double g = gaussian_kernel(e[i], sigma);
    const auto w = reg.W.row_span(i);
    for (std::size_t a = 0; a < n; ++a) {
      rhs[a] += g * w[a] * reg.D[i];
      for (std::size_t b = 0; b < n; ++b) gram(a, b) += g * w[a] * w[b];
    }
  }
  try {
    return solve_spd(gram, rhs);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::SingularDesign, "weighted Gram matrix is singular");
  }
}

double relative_step(const Vector& current, const Vector& previous, StepNorm norm) {
  const auto measure = [norm](const Vector& v) {
    switch (norm) {
      case StepNorm::L1: return norm1(v);
      case StepNorm::Max: return norm_inf(v);
      case StepNorm::Euclidean: break;
    }
    return norm2(v);
  };
  const double step = measure(current - previous);
  const double base = measure(previous);
  return base < 1e-300 ? step : step / base;
}

FixedPointSolution fixed_point_iterate(const AugmentedRegression& reg,
                                       const KernelConfig& config) {
  return fixed_point_iterate(reg, config, reg.prior_mean);
}

FixedPointSolution fixed_point_iterate(const AugmentedRegression& reg, const KernelConfig& config,
                                       const Vector& initial) {
  config.validate();
  const std::size_t n = reg.state_dim();
  const std::size_t m = reg.measurement_dim();
  if (initial.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "fixed_point_iterate: initial state dimension");
  }
  const Vector innovation = reg.y - reg.H * reg.prior_mean;

  FixedPointSolution sol;
  sol.iterates.push_back(initial);
  sol.report.cost_history.push_back(mcc_cost(reg, initial, config.sigma));
  Vector previous = initial;
  for (int t = 1; t <= config.max_iterations; ++t) {
    WeightMatrices weights =
        weight_matrices(compute_residuals(reg, previous), config.sigma, n, m);
    RobustGain rg = robust_gain(reg, weights);
    Vector current = reg.prior_mean + rg.gain * innovation;
    require_finite_iterate(current, t);

    const double step = relative_step(current, previous, config.norm);
    sol.report.iterations = t;
    sol.report.last_relative_step = step;
    sol.report.final_weights = std::move(weights);
    sol.report.cost_history.push_back(mcc_cost(reg, current, config.sigma));
    sol.gain = std::move(rg.gain);
    sol.iterates.push_back(current);
    previous = std::move(current);
    if (step <= config.epsilon) {
      sol.report.converged = true;
      break;
    }
  }
  sol.x = previous;
  return sol;
}

DirectSolution fixed_point_direct(const AugmentedRegression& reg, const KernelConfig& config) {
  return fixed_point_direct(reg, config, reg.prior_mean);
}

DirectSolution fixed_point_direct(const AugmentedRegression& reg, const KernelConfig& config,
                                  const Vector& initial) {
  config.validate();
  const std::size_t n = reg.state_dim();
  const std::size_t m = reg.measurement_dim();
  if (initial.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "fixed_point_direct: initial state dimension");
  }
  const Matrix wt = reg.W.transpose();

  DirectSolution sol;
  sol.iterates.push_back(initial);
  Vector previous = initial;
  for (int t = 1; t <= config.max_iterations; ++t) {
    const WeightMatrices weights =
        weight_matrices(compute_residuals(reg, previous), config.sigma, n, m);
    // WᵀC: scale column i of Wᵀ by c_i.
    Matrix wtc = wt;
    for (std::size_t i = 0; i < n + m; ++i) {
      const double c = i < n ? weights.cx[i] : weights.cy[i - n];
      for (std::size_t r = 0; r < n; ++r) wtc(r, i) *= c;
    }
    Vector current = solve_spd(symmetrized(wtc * reg.W), wtc * reg.D);
    require_finite_iterate(current, t);

    const double step = relative_step(current, previous, config.norm);
    sol.iterations = t;
    sol.iterates.push_back(current);
    previous = std::move(current);
    if (step <= config.epsilon) {
      sol.converged = true;
      break;
    }
  }
  sol.x = previous;
  return sol;
}

MckfStep mckf_step(const StateSpaceModel& model, const GaussianBelief& posterior_prev,
                   const Vector& y, const KernelConfig& config) {
  MckfStep out;
  out.prior = kf_predict(model, posterior_prev);
  const AugmentedRegression reg = build_regression(model, out.prior, y);
  FixedPointSolution sol = fixed_point_iterate(reg, config);
  out.posterior.mean = std::move(sol.x);
  out.posterior.cov = joseph_covariance(out.prior.cov, sol.gain, model.H, model.R);
  out.gain = std::move(sol.gain);
  out.report = std::move(sol.report);
  return out;
}

}  // namespace robustkf
