#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "robustkf/mckf.hpp"
#include "robustkf/model.hpp"

namespace robustkf {

/// Rotating 2-state system observed through y = x1 + x2.
StateSpaceModel make_example1(double theta = std::numbers::pi / 18.0);

/// Position/speed/acceleration kinematics with only the speed observed.
StateSpaceModel make_example2(double dt = 0.1);

enum class ModelKind { Example1, Example2, Custom };
enum class NoiseCase { Gaussian, ImpulsiveMeasurement, ImpulsiveBoth, Custom };
enum class FilterKind { Kalman, Mckf };

std::string to_string(ModelKind kind);
std::string to_string(NoiseCase noise);
std::string to_string(FilterKind kind);

struct FilterSpec {
  FilterKind kind = FilterKind::Kalman;
  KernelConfig kernel;  // ignored for the Kalman filter

  /// "KF" or "MCKF(sigma=2,epsilon=1e-06)".
  std::string label() const;
};

/// How each run is initialized. An empty true_state means the model default
/// (zeros for Example 1, [0 0 1] for Example 2).
struct InitialConvention {
  Vector true_state;
  double estimate_variance = 0.01;
  double covariance_scale = 0.01;
};

struct ExperimentConfig {
  ModelKind model = ModelKind::Example1;
  double theta = std::numbers::pi / 18.0;
  double dt = 0.1;
  std::optional<StateSpaceModel> custom_model;

  NoiseCase noise = NoiseCase::Gaussian;
  std::optional<MixtureNoiseSpec> custom_process_noise;
  std::optional<MixtureNoiseSpec> custom_measurement_noise;
  /// Per-coordinate variances the filters assume for Q and R. When unset,
  /// the analytic variance of the true noise law is used.
  std::optional<double> assumed_process_variance;
  std::optional<double> assumed_measurement_variance;

  int runs = 100;
  int steps = 1000;
  std::vector<FilterSpec> filters;
  std::uint64_t seed = 20160118;
  InitialConvention initial;

  bool collect_errors = false;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;

  /// Throws InvalidConfig on any invalid field.
  void validate() const;
};

/// The model the filters run with (nominal Q and R).
StateSpaceModel resolve_model(const ExperimentConfig& config);
/// True noise laws of the selected case.
MixtureNoiseSpec resolve_process_noise(const ExperimentConfig& config);
MixtureNoiseSpec resolve_measurement_noise(const ExperimentConfig& config);

struct FilterResult {
  FilterSpec spec;
  /// Per-state mean squared error over all steps of all successful runs.
  std::vector<double> mse;
  /// Mean fixed-point iterations per step (1 for the KF).
  double avg_iterations = 0.0;
  /// Steps whose fixed-point loop hit the iteration cap.
  std::uint64_t nonconverged_steps = 0;
  int failed_runs = 0;
  std::vector<std::string> failure_messages;
  /// Smallest eigenvalue seen in any posterior covariance, relative to its max-norm.
  double min_relative_cov_eigenvalue = 0.0;
  /// Estimation errors per state, run-major then step (collect_errors only).
  std::vector<std::vector<double>> errors;
};

struct ExperimentResult {
  int runs = 0;
  int steps = 0;
  std::vector<FilterResult> filters;
};

/// Seeded Monte Carlo comparison. Every filter in a run sees the same truth
/// trajectory and measurements. Results depend only on the config, not on
/// the thread count.
ExperimentResult run_monte_carlo(const ExperimentConfig& config);

struct Histogram {
  std::vector<double> centers;
  /// Fraction of all samples falling in each bin.
  std::vector<double> masses;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t out_of_range = 0;
  double out_of_range_fraction = 0.0;
};

/// Equal-width histogram over [lo, hi]; the upper edge belongs to the last bin.
Histogram error_density(std::span<const double> samples, std::size_t bins, double lo, double hi);

}  // namespace robustkf
