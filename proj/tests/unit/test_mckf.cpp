#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "expect_error.hpp"
#include "oracles.hpp"
#include "robustkf/correntropy.hpp"
#include "robustkf/kf.hpp"
#include "robustkf/linalg.hpp"
#include "robustkf/mckf.hpp"
#include "robustkf/simulation.hpp"

using namespace robustkf;

namespace {

StateSpaceModel scalar_model(double r) {
  return {Matrix{{1}}, Matrix{{1}}, Matrix{{0}}, Matrix{{r}}};
}

struct Instance {
  StateSpaceModel model;
  GaussianBelief prior;
  Vector y;
  AugmentedRegression reg;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t m,
                         double outlier_scale = 3.0) {
  Instance in;
  in.model = oracle::random_model(rng, n, m);
  in.prior = {oracle::random_vector(n, rng, 2.0), oracle::random_spd(n, rng, 0.1)};
  in.y = in.model.H * in.prior.mean + oracle::random_vector(m, rng, outlier_scale);
  in.reg = build_regression(in.model, in.prior, in.y);
  return in;
}

}  // namespace

TEST_CASE("gaussian_kernel") {
  CHECK(gaussian_kernel(0.0, 0.7) == 1.0);
  CHECK(gaussian_kernel(1.0, 1.0) == doctest::Approx(0.606531).epsilon(1e-6));
  const double sigma = 1.7;
  CHECK(gaussian_kernel(sigma * std::sqrt(2.0 * std::log(2.0)), sigma) == doctest::Approx(0.5));
  CHECK(gaussian_kernel(-2.0, 1.3) == gaussian_kernel(2.0, 1.3));
  CHECK(gaussian_kernel(1e6, 1.0) >= 0.0);
  CHECK_THROWS_CODE(gaussian_kernel(1.0, 0.0), ErrorCode::InvalidBandwidth);
  CHECK_THROWS_CODE(gaussian_kernel(1.0, -1.0), ErrorCode::InvalidBandwidth);
}

TEST_CASE("correntropy_estimate") {
  const std::vector<double> zeros(5, 0.0);
  CHECK(correntropy_estimate(zeros, 0.3) == 1.0);
  const std::vector<double> pm{1.0, -1.0};
  CHECK(correntropy_estimate(pm, 1.0) == doctest::Approx(0.606531).epsilon(1e-6));
  CHECK_THROWS_CODE(correntropy_estimate(std::vector<double>{}, 1.0), ErrorCode::EmptyInput);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::vector<double> e(500);
  double mean_sq = 0.0;
  for (double& v : e) {
    v = nd(rng);
    mean_sq += v * v / static_cast<double>(e.size());
  }
  const double sigma = 100.0;
  CHECK(std::fabs(correntropy_estimate(e, sigma) - (1.0 - mean_sq / (2 * sigma * sigma))) <= 1e-6);
}

TEST_CASE("build_regression examples") {
  const StateSpaceModel identity{Matrix::identity(2), Matrix{{1, 2}}, Matrix(2, 2), Matrix{{1}}};
  const AugmentedRegression r1 =
      build_regression(identity, {Vector{3, 4}, Matrix::identity(2)}, Vector{5});
  CHECK(r1.Bp == Matrix::identity(2));
  CHECK(r1.Br == Matrix{{1}});
  CHECK(r1.W == Matrix{{1, 0}, {0, 1}, {1, 2}});
  CHECK(r1.D == Vector{3, 4, 5});

  const AugmentedRegression r2 =
      build_regression(scalar_model(1.0), {Vector{2}, Matrix{{4}}}, Vector{3});
  CHECK(r2.W(0, 0) == doctest::Approx(0.5));
  CHECK(r2.W(1, 0) == doctest::Approx(1.0));
  CHECK(r2.D[0] == doctest::Approx(1.0));
  CHECK(r2.D[1] == doctest::Approx(3.0));

  CHECK_THROWS_CODE(build_regression(scalar_model(1.0), {Vector{2}, Matrix{{-4}}}, Vector{3}),
                    ErrorCode::NotPositiveDefinite);
  CHECK_THROWS_CODE(build_regression(scalar_model(1.0), {Vector{2}, Matrix{{4}}}, Vector{3, 1}),
                    ErrorCode::DimensionMismatch);
}

TEST_CASE("build_regression invariants on random instances") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const std::size_t m = 1 + (trial / 4) % 4;
    const Instance in = random_instance(rng, n, m);
    const AugmentedRegression& reg = in.reg;
    CHECK(reg.stacked_dim() == n + m);

    // Whiteness: B·Bᵀ = blockdiag(P, R).
    const Matrix b = block_diagonal(reg.Bp, reg.Br);
    const Matrix target = block_diagonal(in.prior.cov, in.model.R);
    CHECK(max_abs_diff(b * b.transpose(), target) <= 1e-10 * (1 + target.max_abs()));

    // B·W = [I; H] and B·D = [x̂⁻; y].
    Matrix stacked(n + m, n);
    stacked.set_block(0, 0, Matrix::identity(n));
    stacked.set_block(n, 0, in.model.H);
    CHECK(max_abs_diff(b * reg.W, stacked) <= 1e-10 * (1 + in.model.H.max_abs()));
    Vector top(n + m);
    for (std::size_t i = 0; i < n; ++i) top[i] = in.prior.mean[i];
    for (std::size_t i = 0; i < m; ++i) top[n + i] = in.y[i];
    CHECK(max_abs_diff(b * reg.D, top) <= 1e-10 * (1 + oracle::max_abs(top)));

    // Against explicit-inverse whitening.
    const oracle::Stack s =
        oracle::whiten(in.prior.cov, in.model.R, in.model.H, in.prior.mean, in.y);
    CHECK(oracle::rel_diff(reg.W, s.w) <= 1e-9);
    CHECK(oracle::rel_diff(reg.D, s.d) <= 1e-9);
  }
}

TEST_CASE("compute_residuals and weight_matrices") {
  const AugmentedRegression reg =
      build_regression(scalar_model(1.0), {Vector{2}, Matrix{{4}}}, Vector{3});
  const Vector e = compute_residuals(reg, Vector{2});
  CHECK(e[0] == doctest::Approx(0.0));
  CHECK(e[1] == doctest::Approx(1.0));
  CHECK(compute_residuals(reg, Vector{0}) == reg.D);
  CHECK_THROWS_CODE(compute_residuals(reg, Vector{0, 0}), ErrorCode::DimensionMismatch);

  const WeightMatrices w = weight_matrices(Vector{0, 1}, 1.0, 1, 1);
  CHECK(w.cx[0] == 1.0);
  CHECK(w.cy[0] == doctest::Approx(std::exp(-0.5)));

  const WeightMatrices ones = weight_matrices(Vector::zeros(5), 0.3, 3, 2);
  for (double c : ones.cx) CHECK(c == 1.0);
  for (double c : ones.cy) CHECK(c == 1.0);

  const WeightMatrices floored = weight_matrices(Vector{1e6, 0}, 1.0, 1, 1);
  CHECK(floored.cx[0] == kWeightFloor);
  CHECK_THROWS_CODE(weight_matrices(Vector{0, 0, 0}, 1.0, 1, 1), ErrorCode::DimensionMismatch);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vector r = oracle::random_vector(4, rng, 50.0);
    const WeightMatrices ww = weight_matrices(r, 0.5 + (i % 5), 2, 2);
    for (double c : ww.cx) CHECK((c > 0.0 && c <= 1.0));
    for (double c : ww.cy) CHECK((c > 0.0 && c <= 1.0));
  }
}

TEST_CASE("robust_gain examples") {
  const AugmentedRegression reg =
      build_regression(scalar_model(1.0), {Vector{0}, Matrix{{1}}}, Vector{1});
  const RobustGain half = robust_gain(reg, {{1.0}, {0.5}});
  CHECK(half.P_bar(0, 0) == doctest::Approx(1.0));
  CHECK(half.R_bar(0, 0) == doctest::Approx(2.0));
  CHECK(half.gain(0, 0) == doctest::Approx(1.0 / 3.0));

  const RobustGain distrust = robust_gain(reg, {{1.0}, {kWeightFloor}});
  CHECK(std::fabs(distrust.gain(0, 0)) <= 1e-6);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const std::size_t m = 1 + trial % 2;
    const Instance in = random_instance(rng, n, m);
    const RobustGain g = robust_gain(
        in.reg, {std::vector<double>(n, 1.0), std::vector<double>(m, 1.0)});
    CHECK(max_abs_diff(g.P_bar, in.prior.cov) <= 1e-10 * (1 + in.prior.cov.max_abs()));
    CHECK(max_abs_diff(g.R_bar, in.model.R) <= 1e-10 * (1 + in.model.R.max_abs()));
    const Matrix k = kalman_gain(in.prior.cov, in.model.H, in.model.R);
    CHECK(max_abs_diff(g.gain, k) <= 1e-9 * (1 + k.max_abs()));
  }
}

TEST_CASE("fixed_point_iterate with zero innovation stops after one iteration") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    Instance in = random_instance(rng, 1 + trial % 4, 1 + trial % 2);
    in.reg = build_regression(in.model, in.prior, in.model.H * in.prior.mean);
    const FixedPointSolution sol = fixed_point_iterate(in.reg, {1.0, 1e-6, 100});
    CHECK(sol.report.iterations == 1);
    CHECK(sol.report.converged);
    CHECK(oracle::max_abs(sol.x - in.prior.mean) <= 1e-12 * (1 + oracle::max_abs(in.prior.mean)));
  }
}

TEST_CASE("fixed_point_iterate scalar outlier") {
  const StateSpaceModel model = scalar_model(0.01);
  const GaussianBelief prior{Vector{0}, Matrix{{1}}};
  const AugmentedRegression reg = build_regression(model, prior, Vector{10});
  const KernelConfig config{2.0, 1e-6, 100};
  const FixedPointSolution sol = fixed_point_iterate(reg, config);
  const KfUpdate kf = kf_update(model, prior, Vector{10});
  CHECK(std::fabs(sol.x[0]) < std::fabs(kf.belief.mean[0]));
  const DirectSolution direct = fixed_point_direct(reg, config);
  CHECK(std::fabs(sol.x[0] - direct.x[0]) <= 1e-10);
  CHECK(sol.report.iterations == direct.iterations);
  CHECK(sol.report.iterations >= 1);
  CHECK(sol.iterates.size() == static_cast<std::size_t>(sol.report.iterations) + 1);
  CHECK(sol.report.cost_history.size() == sol.iterates.size());
}

TEST_CASE("fixed_point_direct with unit weights is least squares") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng, 1 + trial % 4, 1 + trial % 3);
    // σ so large every kernel weight rounds to 1.
    const DirectSolution d = fixed_point_direct(in.reg, {1e200, 1e-6, 100});
    const Matrix wt = oracle::naive_transpose(in.reg.W);
    const Matrix ls = oracle::naive_product(oracle::inverse(oracle::naive_product(wt, in.reg.W)), wt);
    const Vector expected = ls * in.reg.D;
    CHECK(oracle::rel_diff(d.x, expected) <= 1e-9);
  }
}

TEST_CASE("gain form and direct form agree per iterate") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const std::size_t m = 1 + (trial / 4) % 4;
    const Instance in = random_instance(rng, n, m, 10.0);
    const KernelConfig config{0.5 + (trial % 7), 1e-9, 100};
    const FixedPointSolution g = fixed_point_iterate(in.reg, config);
    const DirectSolution d = fixed_point_direct(in.reg, config);
    REQUIRE(g.iterates.size() == d.iterates.size());
    for (std::size_t t = 0; t < g.iterates.size(); ++t) {
      const double scale = std::max(1.0, oracle::max_abs(d.iterates[t]));
      CHECK(oracle::max_abs(g.iterates[t] - d.iterates[t]) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("stop rule") {
  CHECK(relative_step(Vector{1.1, 0}, Vector{1, 0}, StepNorm::Euclidean) == doctest::Approx(0.1));
  CHECK(relative_step(Vector{1, 1}, Vector{0, 0}, StepNorm::Euclidean) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(relative_step(Vector{2, 1}, Vector{1, -1}, StepNorm::L1) == doctest::Approx(1.5));
  CHECK(relative_step(Vector{2, 1}, Vector{1, -1}, StepNorm::Max) == doctest::Approx(2.0));

  const AugmentedRegression reg =
      build_regression(scalar_model(0.01), {Vector{0}, Matrix{{1}}}, Vector{10});
  // A moderate outlier keeps the iterates moving, so a two-step cap is hit.
  const AugmentedRegression slow =
      build_regression(scalar_model(1.0), {Vector{0}, Matrix{{1}}}, Vector{3});
  const FixedPointSolution capped = fixed_point_iterate(slow, {2.0, 1e-12, 2});
  CHECK(capped.report.iterations == 2);
  CHECK(capped.report.last_relative_step > 1e-12);
  CHECK_FALSE(capped.report.converged);
  const FixedPointSolution ok = fixed_point_iterate(reg, {2.0, 1e-6, 100});
  CHECK(ok.report.converged);
  CHECK(ok.report.last_relative_step <= 1e-6);

  CHECK_THROWS_CODE(fixed_point_iterate(reg, {0.0, 1e-6, 100}), ErrorCode::InvalidBandwidth);
  CHECK_THROWS_CODE(fixed_point_iterate(reg, {1.0, 0.0, 100}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(fixed_point_iterate(reg, {1.0, 1e-6, 0}), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(fixed_point_iterate(reg, {1.0, 1e-6, 10}, Vector{0, 0}),
                    ErrorCode::DimensionMismatch);
}

TEST_CASE("smaller epsilon never means fewer iterations") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng, 1 + trial % 3, 1 + trial % 2, 10.0);
    int previous = 0;
    for (double eps : {1e-1, 1e-2, 1e-4, 1e-6, 1e-8}) {
      const int its = fixed_point_iterate(in.reg, {2.0, eps, 100}).report.iterations;
      CHECK(its >= previous);
      previous = its;
    }
  }
}

TEST_CASE("mckf_step reduces to the Kalman filter for large sigma") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 4;
    const std::size_t m = 1 + trial % 2;
    const StateSpaceModel model = oracle::random_model(rng, n, m);
    const GaussianBelief post{oracle::random_vector(n, rng), oracle::random_spd(n, rng, 0.1)};
    const Vector y = oracle::random_vector(m, rng, 3.0);
    const KfUpdate kf = kf_update(model, kf_predict(model, post), y);
    const MckfStep step = mckf_step(model, post, y, {1e8, 1e-6, 100});
    CHECK(oracle::rel_diff(step.posterior.mean, kf.belief.mean) <= 1e-8);
    CHECK(oracle::rel_diff(step.posterior.cov, kf.belief.cov) <= 1e-8);

    // The gap shrinks like 1/σ².
    const MckfStep a = mckf_step(model, post, y, {1e4, 1e-12, 100});
    const MckfStep b = mckf_step(model, post, y, {2e4, 1e-12, 100});
    const double gap_a = oracle::max_abs(a.posterior.mean - kf.belief.mean);
    const double gap_b = oracle::max_abs(b.posterior.mean - kf.belief.mean);
    CHECK(gap_b * 3.0 <= gap_a);
  }
}

TEST_CASE("mckf_step details") {
  const StateSpaceModel model = make_example1();
  const GaussianBelief post{Vector{0.3, -0.2}, 0.05 * Matrix::identity(2)};
  const GaussianBelief prior = kf_predict(model, post);

  // Zero innovation: the mean is kept and the covariance is the Kalman one.
  const MckfStep still = mckf_step(model, post, model.H * prior.mean, {2.0, 1e-6, 100});
  CHECK(oracle::max_abs(still.posterior.mean - prior.mean) <= 1e-14);
  const KfUpdate kf = kf_update(model, prior, model.H * prior.mean);
  CHECK(max_abs_diff(still.posterior.cov, kf.belief.cov) <= 1e-14);

  // Impulsive outlier: PSD posterior, at least one iteration.
  const MckfStep outlier = mckf_step(model, post, Vector{25.0}, {2.0, 1e-6, 100});
  CHECK(outlier.report.iterations >= 1);
  CHECK(outlier.posterior.cov == outlier.posterior.cov.transpose());
  CHECK(min_eigenvalue_symmetric(outlier.posterior.cov) >= -1e-10 * outlier.posterior.cov.max_abs());
  CHECK(outlier.posterior.mean.all_finite());
}
