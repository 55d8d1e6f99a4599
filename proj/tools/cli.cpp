#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "config_io.hpp"
#include "robustkf/diagnostics.hpp"
#include "robustkf/error.hpp"
#include "robustkf/kf.hpp"
#include "robustkf/linalg.hpp"
#include "robustkf/simulation.hpp"
#include "table.hpp"

namespace robustkf::cli {

namespace {

namespace fs = std::filesystem;

enum class OutputFormat { Csv, Json };

struct ExperimentFlags {
  std::string config_path;
  std::string example;
  std::string noise;
  std::vector<double> sigmas;
  std::vector<double> epsilons;
  std::optional<int> runs;
  std::optional<int> steps;
  std::optional<int> max_iterations;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out_dir = ".";
  std::string format = "csv";
};

struct DiagnoseFlags {
  ExperimentFlags experiment;
  int step = 1;
  std::optional<double> beta;
  double alpha = 0.5;
};

struct FlopsFlags {
  std::size_t n = 1;
  std::size_t m = 1;
  double T = 1.0;
};

void add_experiment_options(CLI::App& cmd, ExperimentFlags& f) {
  cmd.add_option("--config", f.config_path, "JSON experiment config file");
  cmd.add_option("--example", f.example, "Built-in system: 1 or 2");
  cmd.add_option("--noise", f.noise,
                 "Noise case: gaussian | impulsive (= impulsive-measurement) | impulsive-both");
  cmd.add_option("--sigma", f.sigmas, "Kernel bandwidth list, comma separated")->delimiter(',');
  cmd.add_option("--epsilon", f.epsilons, "Stop threshold list, comma separated")
      ->delimiter(',');
  cmd.add_option("--runs", f.runs, "Monte Carlo runs");
  cmd.add_option("--steps", f.steps, "Time steps per run");
  cmd.add_option("--max-iterations", f.max_iterations, "Fixed-point iteration cap");
  cmd.add_option("--seed", f.seed, "Master seed (overrides ROBUSTKF_SEED and the config)");
  cmd.add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");
  cmd.add_option("--out", f.out_dir, "Output directory");
  cmd.add_option("--format", f.format, "Output format: csv | json");
}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw Error(ErrorCode::ConfigParseError, "unknown output format '" + name + "'");
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("ROBUSTKF_SEED");
  if (!raw || !*raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string text(raw);
    const auto value = std::stoull(text, &used, 10);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigParseError, "ROBUSTKF_SEED is not an unsigned integer");
  }
}

std::vector<FilterSpec> grid_filters(const std::vector<double>& sigmas,
                                     const std::vector<double>& epsilons) {
  std::vector<FilterSpec> filters;
  filters.push_back({FilterKind::Kalman, {}});
  for (double s : sigmas) {
    for (double e : epsilons) {
      FilterSpec f;
      f.kind = FilterKind::Mckf;
      f.kernel.sigma = s;
      f.kernel.epsilon = e;
      filters.push_back(f);
    }
  }
  return filters;
}

// Merges config file, environment and flags; later sources win.
FileConfig resolve_experiment(const ExperimentFlags& flags, const std::vector<double>& sigma_default) {
  FileConfig fc = flags.config_path.empty() ? FileConfig{} : load_config(flags.config_path);
  ExperimentConfig& cfg = fc.experiment;
  if (!flags.example.empty()) cfg.model = parse_model_kind(flags.example);
  if (!flags.noise.empty()) cfg.noise = parse_noise_case(flags.noise);
  if (flags.runs) cfg.runs = *flags.runs;
  if (flags.steps) cfg.steps = *flags.steps;
  if (flags.threads) cfg.threads = *flags.threads;
  if (auto s = env_seed()) cfg.seed = *s;
  if (flags.seed) cfg.seed = *flags.seed;

  for (double v : flags.sigmas) {
    if (!(v > 0.0)) throw Error(ErrorCode::ConfigParseError, "--sigma entries must be positive");
  }
  for (double v : flags.epsilons) {
    if (!(v > 0.0)) throw Error(ErrorCode::ConfigParseError, "--epsilon entries must be positive");
  }
  if (!flags.sigmas.empty() || !flags.epsilons.empty()) {
    cfg.filters = grid_filters(flags.sigmas.empty() ? std::vector<double>{2.0} : flags.sigmas,
                               flags.epsilons.empty() ? std::vector<double>{1e-6}
                                                      : flags.epsilons);
  } else if (cfg.filters.empty()) {
    cfg.filters = grid_filters(sigma_default, {1e-6});
  }
  if (flags.max_iterations) {
    for (auto& f : cfg.filters) f.kernel.max_iterations = *flags.max_iterations;
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigParseError, e.what());
  }
  return fc;
}

std::string comment_line(const std::string& command, const ExperimentConfig& cfg) {
  return "robustkf " + command + " seed=" + std::to_string(cfg.seed) +
         " config_hash=" + config_hash(cfg);
}

void write_table(const Table& table, const fs::path& dir, const std::string& stem,
                 OutputFormat format, const std::string& comment) {
  const fs::path path = dir / (stem + (format == OutputFormat::Csv ? ".csv" : ".json"));
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::ConfigParseError, "cannot write " + path.string());
  if (format == OutputFormat::Csv) {
    table.write_csv(os, comment);
  } else {
    table.write_json(os, comment);
  }
}

Cell sigma_cell(const FilterSpec& f) {
  return f.kind == FilterKind::Mckf ? Cell{f.kernel.sigma} : Cell{};
}

Cell epsilon_cell(const FilterSpec& f) {
  return f.kind == FilterKind::Mckf ? Cell{f.kernel.epsilon} : Cell{};
}

Table mse_table(const ExperimentResult& result) {
  Table t;
  t.columns = {"filter", "sigma", "epsilon", "state_index", "mse"};
  for (const auto& f : result.filters) {
    for (std::size_t i = 0; i < f.mse.size(); ++i) {
      t.rows.push_back({to_string(f.spec.kind), sigma_cell(f.spec), epsilon_cell(f.spec),
                        static_cast<std::int64_t>(i + 1), f.mse[i]});
    }
  }
  return t;
}

Table iterations_table(const ExperimentResult& result) {
  Table t;
  t.columns = {"filter", "sigma", "epsilon", "avg_iterations", "nonconverged_steps"};
  for (const auto& f : result.filters) {
    if (f.spec.kind != FilterKind::Mckf) continue;
    t.rows.push_back({to_string(f.spec.kind), sigma_cell(f.spec), epsilon_cell(f.spec),
                      f.avg_iterations, static_cast<std::int64_t>(f.nonconverged_steps)});
  }
  return t;
}

Table density_table(const ExperimentResult& result, std::size_t state,
                    const HistogramLayout& layout) {
  Table t;
  t.columns = {"filter", "sigma", "epsilon", "bin_center", "mass"};
  const auto [lo, hi] = layout.ranges[std::min(state, layout.ranges.size() - 1)];
  for (const auto& f : result.filters) {
    if (f.errors.size() <= state || f.errors[state].empty()) continue;
    const Histogram h = error_density(f.errors[state], layout.bins, lo, hi);
    for (std::size_t b = 0; b < h.centers.size(); ++b) {
      t.rows.push_back({to_string(f.spec.kind), sigma_cell(f.spec), epsilon_cell(f.spec),
                        h.centers[b], h.masses[b]});
    }
  }
  return t;
}

void print_summary(std::ostream& out, const ExperimentResult& result) {
  for (const auto& f : result.filters) {
    out << std::left << std::setw(32) << f.spec.label();
    for (std::size_t i = 0; i < f.mse.size(); ++i) {
      out << " mse_x" << (i + 1) << '=' << format_double(f.mse[i]);
    }
    if (f.spec.kind == FilterKind::Mckf) {
      out << " avg_iterations=" << format_double(f.avg_iterations);
    }
    if (f.failed_runs > 0) out << " failed_runs=" << f.failed_runs;
    out << '\n';
  }
}

int report_failures(const ExperimentResult& result, std::ostream& err) {
  bool all_failed = true;
  for (const auto& f : result.filters) {
    for (const auto& msg : f.failure_messages) err << f.spec.label() << ": " << msg << '\n';
    if (f.failed_runs < result.runs) all_failed = false;
  }
  return all_failed ? kExitNumericalFailure : kExitOk;
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::ConfigParseError, "cannot create output directory " + dir);
  return p;
}

int cmd_simulate(const ExperimentFlags& flags, std::ostream& out, std::ostream& err) {
  const OutputFormat format = parse_format(flags.format);
  FileConfig fc = resolve_experiment(flags, {2.0});
  ExperimentConfig& cfg = fc.experiment;
  cfg.collect_errors = true;
  const fs::path dir = prepare_out_dir(flags.out_dir);
  const ExperimentResult result = run_monte_carlo(cfg);
  const std::string comment = comment_line("simulate", cfg);

  write_table(mse_table(result), dir, "mse", format, comment);
  write_table(iterations_table(result), dir, "iterations", format, comment);
  const std::size_t n = resolve_model(cfg).state_dim();
  HistogramLayout layout = default_histogram(cfg, n);
  if (fc.histogram) {
    layout.bins = fc.histogram->bins;
    if (!fc.histogram->ranges.empty()) layout.ranges = fc.histogram->ranges;
  }
  for (std::size_t i = 0; i < n; ++i) {
    write_table(density_table(result, i, layout), dir, "density_" + std::to_string(i + 1),
                format, comment);
  }
  print_summary(out, result);
  return report_failures(result, err);
}

int cmd_bench(const ExperimentFlags& flags, std::ostream& out, std::ostream& err) {
  const OutputFormat format = parse_format(flags.format);
  FileConfig fc = resolve_experiment(flags, {0.2, 0.5, 1.0, 2.0, 3.0, 10.0});
  ExperimentConfig& cfg = fc.experiment;
  cfg.collect_errors = false;
  const fs::path dir = prepare_out_dir(flags.out_dir);
  const ExperimentResult result = run_monte_carlo(cfg);
  const std::string comment = comment_line("bench", cfg);
  write_table(mse_table(result), dir, "mse", format, comment);
  write_table(iterations_table(result), dir, "iterations", format, comment);
  print_summary(out, result);
  return report_failures(result, err);
}

int cmd_diagnose(const DiagnoseFlags& flags, std::ostream& out) {
  const OutputFormat format = parse_format(flags.experiment.format);
  if (flags.step < 1) throw Error(ErrorCode::ConfigParseError, "--step must be >= 1");
  FileConfig fc = resolve_experiment(flags.experiment, {2.0});
  ExperimentConfig& cfg = fc.experiment;
  cfg.runs = 1;
  cfg.steps = flags.step;

  // Replay run 0 of the experiment with a Kalman filter up to the requested
  // step, then certify the MCKF fixed point of that step's update.
  const StateSpaceModel model = resolve_model(cfg);
  const MixtureNoiseSpec q_spec = resolve_process_noise(cfg);
  const MixtureNoiseSpec r_spec = resolve_measurement_noise(cfg);
  RandomStream rng = RandomStream::substream(cfg.seed, 0);
  const std::size_t n = model.state_dim();
  Vector truth = cfg.initial.true_state.empty()
                     ? (cfg.model == ModelKind::Example2 ? Vector{0.0, 0.0, 1.0} : Vector::zeros(n))
                     : cfg.initial.true_state;
  GaussianBelief belief{truth, cfg.initial.covariance_scale * Matrix::identity(n)};
  for (std::size_t i = 0; i < n; ++i) {
    belief.mean[i] += rng.normal(0.0, cfg.initial.estimate_variance);
  }
  AugmentedRegression reg;
  for (int k = 1; k <= flags.step; ++k) {
    const TruthStep ts = propagate_truth(model, truth, q_spec, r_spec, rng);
    truth = ts.x_next;
    const GaussianBelief prior = kf_predict(model, belief);
    if (k == flags.step) {
      reg = build_regression(model, prior, ts.y);
    } else {
      belief = kf_update(model, prior, ts.y).belief;
    }
  }

  const double z = zeta(reg);
  const double beta = flags.beta ? *flags.beta : 2.0 * std::max(z, norm1(reg.prior_mean));
  const ConvergenceCertificate cert = sufficient_sigma(reg, beta, flags.alpha);
  KernelConfig kc;
  kc.sigma = cert.sigma_min;
  kc.epsilon = 1e-12;
  const FixedPointSolution sol = fixed_point_iterate(reg, kc);
  const Matrix jac = jacobian_f(reg, sol.x, cert.sigma_min);

  Table t;
  t.columns = {"quantity", "value"};
  const auto add = [&t](const char* name, Cell value) {
    t.rows.push_back({std::string(name), std::move(value)});
  };
  add("step", static_cast<std::int64_t>(flags.step));
  add("zeta", cert.zeta);
  add("beta", cert.beta);
  add("alpha", cert.alpha);
  add("sigma_star", cert.sigma_star);
  add("sigma_dagger", cert.sigma_dagger);
  add("sigma_min", cert.sigma_min);
  add("phi_at_sigma_star", phi_sigma(reg, beta, cert.sigma_star));
  add("psi_at_sigma_dagger", psi_sigma(reg, beta, cert.sigma_dagger));
  add("iterations_at_sigma_min", static_cast<std::int64_t>(sol.report.iterations));
  add("jacobian_l1_at_fixed_point", induced_l1_norm(jac));

  const std::string comment = comment_line("diagnose", cfg);
  if (format == OutputFormat::Csv) {
    t.write_csv(out, comment);
  } else {
    t.write_json(out, comment);
  }
  if (!flags.experiment.out_dir.empty() && flags.experiment.out_dir != ".") {
    write_table(t, prepare_out_dir(flags.experiment.out_dir), "diagnose", format, comment);
  }
  return kExitOk;
}

int cmd_flops(const FlopsFlags& flags, std::ostream& out) {
  if (flags.n < 1 || flags.m < 1 || !(flags.T >= 1.0)) {
    throw Error(ErrorCode::ConfigParseError, "flops needs n, m >= 1 and T >= 1");
  }
  const FlopCounts fc = flop_counts(flags.n, flags.m, flags.T);
  Table t;
  t.columns = {"n", "m", "T", "s_kf", "s_mckf", "kf_unspecified", "mckf_unspecified"};
  t.rows.push_back({static_cast<std::int64_t>(flags.n), static_cast<std::int64_t>(flags.m),
                    flags.T, fc.s_kf, fc.s_mckf, fc.kf_unspecified, fc.mckf_unspecified});
  t.write_csv(out, "robustkf flops");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"robustkf: Kalman and maximum correntropy Kalman filter experiments", "robustkf"};
  app.require_subcommand(1);

  ExperimentFlags simulate_flags;
  auto* simulate = app.add_subcommand("simulate", "Run one Monte Carlo experiment");
  add_experiment_options(*simulate, simulate_flags);

  ExperimentFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "Sweep sigma x epsilon grids");
  add_experiment_options(*bench, bench_flags);

  DiagnoseFlags diagnose_flags;
  auto* diagnose = app.add_subcommand("diagnose", "Convergence certificate for one step");
  add_experiment_options(*diagnose, diagnose_flags.experiment);
  diagnose->add_option("--step", diagnose_flags.step, "Time step to certify (1-based)");
  diagnose->add_option("--beta", diagnose_flags.beta,
                       "Iterate 1-norm bound (default 2*max(zeta, |prior|_1))");
  diagnose->add_option("--alpha", diagnose_flags.alpha, "Contraction factor in (0, 1)");

  FlopsFlags flops_flags;
  auto* flops = app.add_subcommand("flops", "Flop-count polynomials");
  flops->add_option("--n", flops_flags.n, "State dimension")->required();
  flops->add_option("--m", flops_flags.m, "Measurement dimension")->required();
  flops->add_option("--t", flops_flags.T, "Average fixed-point iterations")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(simulate_flags, out, err);
    if (*bench) return cmd_bench(bench_flags, out, err);
    if (*diagnose) return cmd_diagnose(diagnose_flags, out);
    if (*flops) return cmd_flops(flops_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool config = e.code() == ErrorCode::ConfigParseError ||
                        e.code() == ErrorCode::InvalidConfig ||
                        e.code() == ErrorCode::InvalidBandwidth;
    return config ? kExitConfigError : kExitNumericalFailure;
  }
  return kExitConfigError;
}

}  // namespace robustkf::cli
