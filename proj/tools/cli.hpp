#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace robustkf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNumericalFailure = 2;

/// Entry point of the `robustkf` tool. `args` excludes the program name.
///
/// Subcommands:
///   simulate  one experiment; writes mse, iterations and density_<i> tables
///   bench     sigma x epsilon sweep; writes mse and iterations tables
///   diagnose  convergence certificate for one filter step snapshot
///   flops     per-step flop-count polynomials
///
/// Returns 0 on success, 1 on a configuration error and 2 on a numerical
/// failure (for simulate/bench: only when every run of every filter failed).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace robustkf::cli
