#include "robustkf/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "robustkf/correntropy.hpp"
#include "robustkf/error.hpp"
#include "robustkf/linalg.hpp"

namespace robustkf {

namespace {

constexpr double kGridLow = 1e-6;
constexpr double kGridHigh = 1e9;
constexpr int kPointsPerDecade = 40;
constexpr int kBisectionSteps = 80;

double row_l1(const Matrix& w, std::size_t i) {
  double acc = 0.0;
  for (double v : w.row_span(i)) acc += std::abs(v);
  return acc;
}

double row_max_abs(const Matrix& w, std::size_t i) {
  double acc = 0.0;
  for (double v : w.row_span(i)) acc = std::max(acc, std::abs(v));
  return acc;
}

// √n·Σ‖w_iᵀ‖₁|d_i|
double zeta_numerator(const AugmentedRegression& reg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < reg.stacked_dim(); ++i) acc += row_l1(reg.W, i) * std::abs(reg.D[i]);
  return std::sqrt(static_cast<double>(reg.state_dim())) * acc;
}

// λ_min[Σ c_i·w_iᵀw_i]
double weighted_gram_min_eigenvalue(const AugmentedRegression& reg,
                                    const std::function<double(std::size_t)>& weight) {
  const std::size_t n = reg.state_dim();
  Matrix gram(n, n);
  for (std::size_t i = 0; i < reg.stacked_dim(); ++i) {
    const double c = weight(i);
    const auto w = reg.W.row_span(i);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) gram(a, b) += c * w[a] * w[b];
  }
  return min_eigenvalue_symmetric(gram);
}

double bounded_gram_min_eigenvalue(const AugmentedRegression& reg, double beta, double sigma) {
  return weighted_gram_min_eigenvalue(reg, [&](std::size_t i) {
    return gaussian_kernel(beta * row_l1(reg.W, i) + std::abs(reg.D[i]), sigma);
  });
}

void require_positive(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidBandwidth, "sigma must be positive");
}

// Smallest σ on [kGridLow, kGridHigh] with g(σ) ≤ target, for g nonincreasing.
// Non-finite values of g count as +∞.
double solve_nonincreasing(const std::function<double(double)>& g, double target,
                           const char* what) {
  const auto at_or_below = [&](double s) {
    const double v = g(s);
    return std::isfinite(v) && v <= target;
  };
  const int decades = static_cast<int>(std::lround(std::log10(kGridHigh / kGridLow)));
  const int points = decades * kPointsPerDecade;
  double previous = kGridLow;
  if (at_or_below(previous)) return previous;
  for (int k = 1; k <= points; ++k) {
    const double s = kGridLow * std::pow(10.0, static_cast<double>(k) / kPointsPerDecade);
    if (at_or_below(s)) {
      double lo = previous;
      double hi = s;
      for (int step = 0; step < kBisectionSteps; ++step) {
        const double mid = std::sqrt(lo * hi);
        if (at_or_below(mid)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return hi;
    }
    previous = s;
  }
  throw Error(ErrorCode::BracketNotFound,
              std::string(what) + ": no root bracketed in [1e-6, 1e9]");
}

}  // namespace

double zeta(const AugmentedRegression& reg) {
  const double lambda = weighted_gram_min_eigenvalue(reg, [](std::size_t) { return 1.0; });
  if (!(lambda > 0.0)) throw Error(ErrorCode::SingularDesign, "zeta: Σ w_iᵀw_i is singular");
  return zeta_numerator(reg) / lambda;
}

double phi_sigma(const AugmentedRegression& reg, double beta, double sigma) {
  require_positive(sigma);
  const double lambda = bounded_gram_min_eigenvalue(reg, beta, sigma);
  if (!(lambda > 0.0)) throw Error(ErrorCode::SingularDesign, "phi: weighted Gram is singular");
  return zeta_numerator(reg) / lambda;
}

double psi_sigma(const AugmentedRegression& reg, double beta, double sigma) {
  require_positive(sigma);
  double acc = 0.0;
  for (std::size_t i = 0; i < reg.stacked_dim(); ++i) {
    const double w1 = row_l1(reg.W, i);
    const double d = std::abs(reg.D[i]);
    // Induced 1-norm of the rank-one w_iᵀw_i is max_j|w_ij|·‖w_i‖₁.
    const double outer_norm = row_max_abs(reg.W, i) * w1;
    acc += (beta * w1 + d) * w1 * (beta * outer_norm + w1 * d);
  }
  const double lambda = bounded_gram_min_eigenvalue(reg, beta, sigma);
  if (!(lambda > 0.0)) throw Error(ErrorCode::SingularDesign, "psi: weighted Gram is singular");
  return std::sqrt(static_cast<double>(reg.state_dim())) * acc / (sigma * sigma * lambda);
}

ConvergenceCertificate sufficient_sigma(const AugmentedRegression& reg, double beta,
                                        double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0, 1)");
  }
  ConvergenceCertificate cert;
  cert.beta = beta;
  cert.alpha = alpha;
  cert.zeta = zeta(reg);
  if (!(beta > cert.zeta)) {
    throw Error(ErrorCode::BetaTooSmall, "beta = " + std::to_string(beta) +
                                             " does not exceed zeta = " + std::to_string(cert.zeta));
  }
  const auto safe = [](auto fn) {
    return [fn](double s) {
      try {
        return fn(s);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::SingularDesign) throw;
        return std::numeric_limits<double>::infinity();
      }
    };
  };
  cert.sigma_star = solve_nonincreasing(
      safe([&](double s) { return phi_sigma(reg, beta, s); }), beta, "phi(sigma) = beta");
  cert.sigma_dagger = solve_nonincreasing(
      safe([&](double s) { return psi_sigma(reg, beta, s); }), alpha, "psi(sigma) = alpha");
  cert.sigma_min = std::max(cert.sigma_star, cert.sigma_dagger);
  return cert;
}

Matrix jacobian_f(const AugmentedRegression& reg, const Vector& x, double sigma) {
  require_positive(sigma);
  const std::size_t n = reg.state_dim();
  const std::size_t L = reg.stacked_dim();
  const Vector e = compute_residuals(reg, x);
  std::vector<double> g(L);
  for (std::size_t i = 0; i < L; ++i) g[i] = gaussian_kernel(e[i], sigma);

  Matrix nww(n, n);
  for (std::size_t i = 0; i < L; ++i) {
    const auto w = reg.W.row_span(i);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) nww(a, b) += g[i] * w[a] * w[b];
  }
  Matrix nww_chol;
  try {
    nww_chol = cholesky_lower(nww);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NotPositiveDefinite) throw;
    throw Error(ErrorCode::SingularDesign, "jacobian_f: N_ww is singular");
  }
  const auto solve = [&](const Vector& v) {
    return solve_lower_transpose(nww_chol, solve_lower(nww_chol, v));
  };
  Vector rhs(n);
  for (std::size_t i = 0; i < L; ++i) {
    const auto w = reg.W.row_span(i);
    for (std::size_t a = 0; a < n; ++a) rhs[a] += g[i] * w[a] * reg.D[i];
  }
  const Vector f = solve(rhs);

  const double inv_s2 = 1.0 / (sigma * sigma);
  Matrix jac(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    // Column j: N⁻¹·(1/σ²)·Σ e_i·w_ij·G_i·w_iᵀ·(d_i − w_i·f).
    Vector col(n);
    for (std::size_t i = 0; i < L; ++i) {
      const auto w = reg.W.row_span(i);
      double wf = 0.0;
      for (std::size_t a = 0; a < n; ++a) wf += w[a] * f[a];
      const double scale = inv_s2 * e[i] * w[j] * g[i];
      for (std::size_t a = 0; a < n; ++a) col[a] += scale * w[a] * (reg.D[i] - wf);
    }
    const Vector dcol = solve(col);
    for (std::size_t a = 0; a < n; ++a) jac(a, j) = dcol[a];
  }
  return jac;
}

FlopCounts flop_counts(std::size_t n_count, std::size_t m_count, double T) {
  const double n = static_cast<double>(n_count);
  const double m = static_cast<double>(m_count);
  FlopCounts out;
  out.s_kf = 8 * n * n * n + 10 * n * n * m - n * n + 6 * n * m * m - n;
  out.s_mckf = (2 * T + 8) * n * n * n + (6 + 4 * T) * T * n * n * m + (2 * T - 1) * n * n +
               (4 * T + 2) * n * m * m + (3 * T - 1) * n * m + (4 * T - 1) * n +
               2 * T * m * m * m + 2 * T * m;
  out.kf_unspecified = "O(m^3)";
  out.mckf_unspecified = "T*O(n^3) + 2T*O(m^3)";
  return out;
}

}  // namespace robustkf
