#include "robustkf/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "robustkf/error.hpp"
#include "robustkf/kf.hpp"
#include "robustkf/linalg.hpp"

namespace robustkf {

StateSpaceModel make_example1(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return StateSpaceModel{
      .F = Matrix{{c, -s}, {s, c}},
      .H = Matrix{{1.0, 1.0}},
      .Q = 0.01 * Matrix::identity(2),
      .R = Matrix{{0.01}},
  };
}

StateSpaceModel make_example2(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "sampling interval must be positive");
  return StateSpaceModel{
      .F = Matrix{{1.0, dt, 0.0}, {0.0, 1.0, dt}, {0.0, 0.0, 1.0}},
      .H = Matrix{{0.0, 1.0, 0.0}},
      .Q = 0.01 * Matrix::identity(3),
      .R = Matrix{{0.01}},
  };
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Example1: return "example1";
    case ModelKind::Example2: return "example2";
    case ModelKind::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(NoiseCase noise) {
  switch (noise) {
    case NoiseCase::Gaussian: return "gaussian";
    case NoiseCase::ImpulsiveMeasurement: return "impulsive-measurement";
    case NoiseCase::ImpulsiveBoth: return "impulsive-both";
    case NoiseCase::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(FilterKind kind) { return kind == FilterKind::Kalman ? "KF" : "MCKF"; }

std::string FilterSpec::label() const {
  if (kind == FilterKind::Kalman) return "KF";
  char buf[96];
  std::snprintf(buf, sizeof buf, "MCKF(sigma=%g,epsilon=%g)", kernel.sigma, kernel.epsilon);
  return buf;
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw Error(ErrorCode::InvalidConfig, "runs must be >= 1");
  if (steps < 1) throw Error(ErrorCode::InvalidConfig, "steps must be >= 1");
  if (filters.empty()) throw Error(ErrorCode::InvalidConfig, "no filters configured");
  for (const auto& f : filters) {
    if (f.kind == FilterKind::Mckf) f.kernel.validate();
  }
  if (model == ModelKind::Custom && !custom_model) {
    throw Error(ErrorCode::InvalidConfig, "custom model selected but none given");
  }
  if (noise == NoiseCase::Custom && (!custom_process_noise || !custom_measurement_noise)) {
    throw Error(ErrorCode::InvalidConfig, "custom noise selected but specs missing");
  }
  if (assumed_process_variance && !(*assumed_process_variance >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "assumed process variance must be non-negative");
  }
  if (assumed_measurement_variance && !(*assumed_measurement_variance > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "assumed measurement variance must be positive");
  }
  if (!(initial.estimate_variance >= 0.0) || !(initial.covariance_scale > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "invalid initial-state convention");
  }
  const StateSpaceModel m = resolve_model(*this);
  validate_model(m);
  if (!initial.true_state.empty() && initial.true_state.size() != m.state_dim()) {
    throw Error(ErrorCode::InvalidConfig, "initial true state has the wrong dimension");
  }
  const auto q = resolve_process_noise(*this);
  const auto r = resolve_measurement_noise(*this);
  validate_noise(q);
  validate_noise(r);
  if (q.dim() != m.state_dim() || r.dim() != m.measurement_dim()) {
    throw Error(ErrorCode::InvalidConfig, "noise dimensions do not match the model");
  }
}

namespace {

// F and H of the selected system; Q and R still hold the Gaussian defaults.
StateSpaceModel base_model(const ExperimentConfig& config) {
  switch (config.model) {
    case ModelKind::Example1: return make_example1(config.theta);
    case ModelKind::Example2: return make_example2(config.dt);
    case ModelKind::Custom: break;
  }
  return config.custom_model.value();
}

}  // namespace

MixtureNoiseSpec resolve_process_noise(const ExperimentConfig& config) {
  const std::size_t n = base_model(config).state_dim();
  switch (config.noise) {
    case NoiseCase::Gaussian:
    case NoiseCase::ImpulsiveMeasurement: return MixtureNoiseSpec::gaussian(n, 0.01);
    case NoiseCase::ImpulsiveBoth: return MixtureNoiseSpec::contaminated(n, 0.01, 0.1, 1.0);
    case NoiseCase::Custom: return config.custom_process_noise.value();
  }
  return {};
}

MixtureNoiseSpec resolve_measurement_noise(const ExperimentConfig& config) {
  const std::size_t m = base_model(config).measurement_dim();
  switch (config.noise) {
    case NoiseCase::Gaussian: return MixtureNoiseSpec::gaussian(m, 0.01);
    case NoiseCase::ImpulsiveMeasurement:
    case NoiseCase::ImpulsiveBoth: return MixtureNoiseSpec::contaminated(m, 0.01, 0.1, 100.0);
    case NoiseCase::Custom: return config.custom_measurement_noise.value();
  }
  return {};
}

StateSpaceModel resolve_model(const ExperimentConfig& config) {
  StateSpaceModel m = base_model(config);
  // Built-in systems take Q and R from the second moments of the noise that
  // actually drives the simulation; a custom model keeps its own matrices.
  if (config.model != ModelKind::Custom) {
    const Vector q = resolve_process_noise(config).variance();
    const Vector r = resolve_measurement_noise(config).variance();
    m.Q = Matrix::diagonal(q.values());
    m.R = Matrix::diagonal(r.values());
  }
  if (config.assumed_process_variance) {
    m.Q = *config.assumed_process_variance * Matrix::identity(m.state_dim());
  }
  if (config.assumed_measurement_variance) {
    m.R = *config.assumed_measurement_variance * Matrix::identity(m.measurement_dim());
  }
  return m;
}

namespace {

struct FilterRunOutcome {
  std::vector<double> sum_sq;
  std::uint64_t iterations = 0;
  std::uint64_t nonconverged = 0;
  double min_relative_eig = std::numeric_limits<double>::infinity();
  bool failed = false;
  std::string failure;
  std::vector<std::vector<double>> errors;
};

Vector default_true_state(const ExperimentConfig& config, std::size_t n) {
  if (!config.initial.true_state.empty()) return config.initial.true_state;
  if (config.model == ModelKind::Example2) return Vector{0.0, 0.0, 1.0};
  return Vector::zeros(n);
}

double relative_min_eigenvalue(const Matrix& cov) {
  const double scale = cov.max_abs();
  if (scale == 0.0) return 0.0;
  return min_eigenvalue_symmetric(cov) / scale;
}

std::vector<FilterRunOutcome> simulate_run(const ExperimentConfig& config,
                                           const StateSpaceModel& model,
                                           const MixtureNoiseSpec& q_spec,
                                           const MixtureNoiseSpec& r_spec, int run) {
  const std::size_t n = model.state_dim();
  const auto steps = static_cast<std::size_t>(config.steps);
  RandomStream rng = RandomStream::substream(config.seed, static_cast<std::uint64_t>(run));

  const Vector x0 = default_true_state(config, n);
  Vector estimate0 = x0;
  for (std::size_t i = 0; i < n; ++i) {
    estimate0[i] += rng.normal(0.0, config.initial.estimate_variance);
  }
  const GaussianBelief initial{estimate0, config.initial.covariance_scale * Matrix::identity(n)};

  std::vector<Vector> truth;
  std::vector<Vector> measurements;
  truth.reserve(steps);
  measurements.reserve(steps);
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    TruthStep step = propagate_truth(model, x, q_spec, r_spec, rng);
    x = step.x_next;
    truth.push_back(std::move(step.x_next));
    measurements.push_back(std::move(step.y));
  }

  std::vector<FilterRunOutcome> outcomes(config.filters.size());
  for (std::size_t f = 0; f < config.filters.size(); ++f) {
    const FilterSpec& spec = config.filters[f];
    FilterRunOutcome& out = outcomes[f];
    out.sum_sq.assign(n, 0.0);
    if (config.collect_errors) {
      out.errors.assign(n, {});
      for (auto& e : out.errors) e.reserve(steps);
    }
    GaussianBelief belief = initial;
    try {
      for (std::size_t k = 0; k < steps; ++k) {
        if (spec.kind == FilterKind::Kalman) {
          belief = kf_update(model, kf_predict(model, belief), measurements[k]).belief;
          out.iterations += 1;
        } else {
          MckfStep step = mckf_step(model, belief, measurements[k], spec.kernel);
          belief = std::move(step.posterior);
          out.iterations += static_cast<std::uint64_t>(step.report.iterations);
          if (!step.report.converged) ++out.nonconverged;
        }
        out.min_relative_eig = std::min(out.min_relative_eig, relative_min_eigenvalue(belief.cov));
        for (std::size_t i = 0; i < n; ++i) {
          const double err = belief.mean[i] - truth[k][i];
          out.sum_sq[i] += err * err;
          if (config.collect_errors) out.errors[i].push_back(err);
        }
      }
    } catch (const Error& err) {
      out = FilterRunOutcome{};
      out.failed = true;
      out.failure = "run " + std::to_string(run) + ": " + err.what();
    }
  }
  return outcomes;
}

}  // namespace

ExperimentResult run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  const StateSpaceModel model = resolve_model(config);
  const MixtureNoiseSpec q_spec = resolve_process_noise(config);
  const MixtureNoiseSpec r_spec = resolve_measurement_noise(config);
  const std::size_t n = model.state_dim();

  std::vector<std::vector<FilterRunOutcome>> per_run(static_cast<std::size_t>(config.runs));
  unsigned workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1u, static_cast<unsigned>(config.runs));
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int r = next++; r < config.runs; r = next++) {
      per_run[static_cast<std::size_t>(r)] = simulate_run(config, model, q_spec, r_spec, r);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  // Reduce in run order so the sums do not depend on scheduling.
  ExperimentResult result;
  result.runs = config.runs;
  result.steps = config.steps;
  for (std::size_t f = 0; f < config.filters.size(); ++f) {
    FilterResult fr;
    fr.spec = config.filters[f];
    std::vector<double> sum_sq(n, 0.0);
    std::uint64_t iterations = 0;
    double min_eig = std::numeric_limits<double>::infinity();
    if (config.collect_errors) fr.errors.assign(n, {});
    for (auto& run : per_run) {
      FilterRunOutcome& o = run[f];
      if (o.failed) {
        ++fr.failed_runs;
        fr.failure_messages.push_back(o.failure);
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) sum_sq[i] += o.sum_sq[i];
      iterations += o.iterations;
      fr.nonconverged_steps += o.nonconverged;
      min_eig = std::min(min_eig, o.min_relative_eig);
      if (config.collect_errors) {
        for (std::size_t i = 0; i < n; ++i) {
          fr.errors[i].insert(fr.errors[i].end(), o.errors[i].begin(), o.errors[i].end());
        }
      }
    }
    const int ok_runs = config.runs - fr.failed_runs;
    const double samples = static_cast<double>(ok_runs) * config.steps;
    fr.mse.assign(n, std::numeric_limits<double>::quiet_NaN());
    if (ok_runs > 0) {
      for (std::size_t i = 0; i < n; ++i) fr.mse[i] = sum_sq[i] / samples;
      fr.avg_iterations = static_cast<double>(iterations) / samples;
      fr.min_relative_cov_eigenvalue = min_eig;
    }
    result.filters.push_back(std::move(fr));
  }
  return result;
}

Histogram error_density(std::span<const double> samples, std::size_t bins, double lo, double hi) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "error_density: no samples");
  if (bins < 2 || !(lo < hi)) throw Error(ErrorCode::InvalidConfig, "error_density: bad binning");
  Histogram h;
  h.total = samples.size();
  h.counts.assign(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double s : samples) {
    if (!(s >= lo && s <= hi)) {
      ++h.out_of_range;
      continue;
    }
    auto idx = static_cast<std::size_t>((s - lo) / width);
    ++h.counts[std::min(idx, bins - 1)];
  }
  const double total = static_cast<double>(h.total);
  h.centers.resize(bins);
  h.masses.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    h.centers[b] = lo + (static_cast<double>(b) + 0.5) * width;
    h.masses[b] = static_cast<double>(h.counts[b]) / total;
  }
  h.out_of_range_fraction = static_cast<double>(h.out_of_range) / total;
  return h;
}

}  // namespace robustkf
