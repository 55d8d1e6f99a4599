#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "expect_error.hpp"
#include "oracles.hpp"
#include "robustkf/diagnostics.hpp"
#include "robustkf/linalg.hpp"
#include "robustkf/mckf.hpp"

using namespace robustkf;

namespace {

// Regression with explicit W and D (the other fields only carry dimensions).
AugmentedRegression stack(const Matrix& w, const Vector& d, std::size_t m) {
  AugmentedRegression reg;
  reg.W = w;
  reg.D = d;
  const std::size_t n = w.cols();
  reg.Bp = Matrix::identity(n);
  reg.Br = Matrix::identity(m);
  reg.prior_mean = Vector::zeros(n);
  reg.y = Vector::zeros(m);
  reg.H = w.block(n, 0, m, n);
  return reg;
}

oracle::Stack as_stack(const AugmentedRegression& reg) { return {reg.D, reg.W}; }

AugmentedRegression random_regression(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                      double spread) {
  const Matrix p = oracle::random_spd(n, rng, 0.2);
  const Matrix r = oracle::random_spd(m, rng, 0.3);
  StateSpaceModel model{Matrix::identity(n), oracle::random_matrix(m, n, rng), Matrix(n, n), r};
  const Vector prior = oracle::random_vector(n, rng, 1.0);
  const Vector y = model.H * prior + oracle::random_vector(m, rng, spread);
  return build_regression(model, {prior, p}, y);
}

}  // namespace

TEST_CASE("zeta examples") {
  const AugmentedRegression reg = stack(Matrix{{1}, {1}}, Vector{1, 1}, 1);
  CHECK(zeta(reg) == doctest::Approx(1.0));
  CHECK(zeta(stack(Matrix{{1}, {1}}, Vector{0, 0}, 1)) == 0.0);
  CHECK(zeta(stack(Matrix{{1}, {1}}, Vector{2, 2}, 1)) == doctest::Approx(2.0));
  CHECK_THROWS_CODE(zeta(stack(Matrix{{1, 1}, {1, 1}, {2, 2}}, Vector{1, 1, 1}, 1)),
                    ErrorCode::SingularDesign);
}

TEST_CASE("phi and psi on the hand scalar instance") {
  const AugmentedRegression reg = stack(Matrix{{1}, {1}}, Vector{1, 1}, 1);
  // Both rows: β‖w‖₁ + |d| = 3, so G = exp(−4.5) at σ = 1.
  CHECK(phi_sigma(reg, 2.0, 1.0) == doctest::Approx(std::exp(4.5)));
  CHECK(psi_sigma(reg, 2.0, 1.0) == doctest::Approx(9.0 * std::exp(4.5)));
  const oracle::Stack s = as_stack(reg);
  CHECK(phi_sigma(reg, 2.0, 1.0) == doctest::Approx(oracle::phi(s, 2.0, 1.0)).epsilon(1e-9));
  CHECK(psi_sigma(reg, 2.0, 1.0) == doctest::Approx(oracle::psi(s, 2.0, 1.0)).epsilon(1e-9));
  CHECK(psi_sigma(stack(Matrix{{1}, {1}}, Vector{0, 0}, 1), 0.0, 1.0) == 0.0);
  CHECK_THROWS_CODE(phi_sigma(reg, 2.0, 0.0), ErrorCode::InvalidBandwidth);
}

TEST_CASE("zeta, phi and psi match brute-force evaluation") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const std::size_t m = 1 + (trial / 4) % 3;
    const AugmentedRegression reg = random_regression(rng, n, m, 5.0);
    const oracle::Stack s = as_stack(reg);
    const double z = zeta(reg);
    CHECK(z == doctest::Approx(oracle::zeta(s)).epsilon(1e-9));
    const double beta = 1.5 * z + 0.1;
    // Bandwidths relative to the largest β-ball residual keep every weight
    // well above underflow, where both evaluations are meaningful.
    double reach = 0.0;
    for (std::size_t i = 0; i < s.w.rows(); ++i) {
      reach = std::max(reach, beta * oracle::row_l1(s.w, i) + std::fabs(s.d[i]));
    }
    for (double scale : {0.5, 1.0, 2.0, 5.0}) {
      const double sigma = scale * reach;
      CHECK(phi_sigma(reg, beta, sigma) == doctest::Approx(oracle::phi(s, beta, sigma)).epsilon(1e-8));
      CHECK(psi_sigma(reg, beta, sigma) == doctest::Approx(oracle::psi(s, beta, sigma)).epsilon(1e-8));
    }
  }
}

TEST_CASE("phi and psi shape") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const AugmentedRegression reg = random_regression(rng, 1 + trial % 4, 1 + trial % 2, 3.0);
    const double z = zeta(reg);
    const double beta = 2.0 * z + 0.5;
    CHECK(phi_sigma(reg, beta, 1e12) == doctest::Approx(z).epsilon(1e-9));
    double prev_phi = INFINITY;
    double prev_psi = INFINITY;
    double reach = 0.0;
    for (std::size_t i = 0; i < reg.stacked_dim(); ++i) {
      reach = std::max(reach, beta * oracle::row_l1(reg.W, i) + std::fabs(reg.D[i]));
    }
    for (double sigma = 0.25 * reach; sigma < 1e5; sigma *= 2.0) {
      const double ph = phi_sigma(reg, beta, sigma);
      const double ps = psi_sigma(reg, beta, sigma);
      CHECK(ph >= z * (1 - 1e-12));
      CHECK(ph <= prev_phi * (1 + 1e-12));
      CHECK(ps < prev_psi);
      prev_phi = ph;
      prev_psi = ps;
    }
    // Large-bandwidth tail decays like σ⁻².
    CHECK(psi_sigma(reg, beta, 1e9) ==
          doctest::Approx(psi_sigma(reg, beta, 1e8) / 100.0).epsilon(1e-3));
  }
}

TEST_CASE("sufficient_sigma") {
  std::mt19937_64 rng(13);
  const AugmentedRegression reg = random_regression(rng, 2, 1, 3.0);
  const double z = zeta(reg);
  CHECK_THROWS_CODE(sufficient_sigma(reg, z / 2.0, 0.5), ErrorCode::BetaTooSmall);
  CHECK_THROWS_CODE(sufficient_sigma(reg, z, 0.5), ErrorCode::BetaTooSmall);
  CHECK_THROWS_CODE(sufficient_sigma(reg, 2 * z, 1.0), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(sufficient_sigma(reg, 2 * z, 0.0), ErrorCode::InvalidConfig);

  for (int trial = 0; trial < 50; ++trial) {
    const AugmentedRegression r = random_regression(rng, 1 + trial % 4, 1 + trial % 2, 3.0);
    const double beta = 2.0 * std::max(zeta(r), norm1(r.prior_mean));
    const ConvergenceCertificate c = sufficient_sigma(r, beta, 0.5);
    CHECK(c.beta == beta);
    CHECK(c.alpha == 0.5);
    CHECK(c.beta > c.zeta);
    CHECK(c.sigma_min == std::max(c.sigma_star, c.sigma_dagger));
    if (c.sigma_star > 1e-6) {
      CHECK(phi_sigma(r, beta, c.sigma_star) == doctest::Approx(beta).epsilon(1e-6));
    } else {
      CHECK(phi_sigma(r, beta, c.sigma_star) <= beta * (1 + 1e-6));
    }
    CHECK(psi_sigma(r, beta, c.sigma_dagger) == doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("certified bandwidth gives a contraction") {
  std::mt19937_64 rng(17);
  int cost_rises = 0;
  int certified = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const AugmentedRegression reg = random_regression(rng, 1 + trial % 3, 1 + trial % 2, 4.0);
    const double beta = 2.0 * std::max(zeta(reg), norm1(reg.prior_mean));
    const ConvergenceCertificate c = sufficient_sigma(reg, beta, 0.5);
    ++certified;
    const KernelConfig config{c.sigma_min, 1e-14, 200};
    const FixedPointSolution sol = fixed_point_iterate(reg, config);
    CHECK(sol.report.converged);
    for (std::size_t t = 2; t < sol.iterates.size(); ++t) {
      const double gap = norm1(sol.iterates[t] - sol.iterates[t - 1]);
      const double prev = norm1(sol.iterates[t - 1] - sol.iterates[t - 2]);
      CHECK(gap <= 0.5 * prev + 1e-15);
    }
    if (sol.report.cost_history.back() >= sol.report.cost_history.front() - 1e-15) ++cost_rises;
    CHECK(induced_l1_norm(jacobian_f(reg, sol.x, c.sigma_min)) <= 0.5);
  }
  CHECK(cost_rises >= certified * 99 / 100);
}

TEST_CASE("jacobian_f matches finite differences") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const AugmentedRegression reg = random_regression(rng, 1 + trial % 4, 1 + trial % 3, 4.0);
    const double sigma = 0.8 + 0.5 * (trial % 6);
    const Vector x = reg.prior_mean + oracle::random_vector(reg.state_dim(), rng, 0.5);
    const Matrix analytic = jacobian_f(reg, x, sigma);
    const Matrix fd = oracle::jacobian_fd(as_stack(reg), x, sigma);
    CHECK(max_abs_diff(analytic, fd) <= 1e-5 * std::max(1.0, fd.max_abs()));
  }
}

TEST_CASE("jacobian_f limits") {
  const Matrix w{{1, 0}, {0, 2}, {1, 1}};
  const Vector x0{0.5, -1.0};
  const AugmentedRegression consistent = stack(w, w * x0, 1);
  CHECK(jacobian_f(consistent, x0, 1.0).max_abs() == 0.0);

  std::mt19937_64 rng(23);
  const AugmentedRegression reg = random_regression(rng, 3, 2, 3.0);
  CHECK(jacobian_f(reg, reg.prior_mean, 1e8).max_abs() <= 1e-12);
}

TEST_CASE("flop_counts") {
  const FlopCounts a = flop_counts(2, 1, 1);
  CHECK(a.s_kf == 110.0);
  CHECK(a.kf_unspecified == "O(m^3)");
  CHECK(a.mckf_unspecified == "T*O(n^3) + 2T*O(m^3)");
  CHECK(flop_counts(1, 1, 1).s_mckf == 36.0);
  CHECK(flop_counts(2, 1, 2).s_mckf == 272.0);
  CHECK(flop_counts(3, 1, 3).s_mckf == 1020.0);
  CHECK(flop_counts(3, 1, 3).s_kf == 312.0);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t m = 1; m <= 4; ++m) {
      double prev = 0.0;
      for (int t = 1; t <= 8; ++t) {
        const FlopCounts f = flop_counts(n, m, t);
        CHECK(f.s_kf == oracle::s_kf(n, m));
        CHECK(f.s_mckf == oracle::s_mckf(n, m, t));
        CHECK(f.s_mckf > prev);
        prev = f.s_mckf;
      }
    }
  }
}
