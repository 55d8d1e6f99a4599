#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustkf/simulation.hpp"

namespace robustkf::cli {

/// Histogram layout for density_<i>.csv; one (lo, hi) per state.
struct HistogramLayout {
  std::size_t bins = 101;
  std::vector<std::pair<double, double>> ranges;
};

/// Everything a config file can carry.
struct FileConfig {
  ExperimentConfig experiment;
  std::optional<HistogramLayout> histogram;
};

/// Parses the JSON config format documented in README.md. Unknown keys and
/// malformed values raise Error(ConfigParseError).
FileConfig parse_config(const nlohmann::json& doc);
FileConfig load_config(const std::string& path);

/// Canonical JSON of an experiment config (used for hashing and echoing).
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a 64-bit hash of the canonical JSON text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Figure-reproduction defaults: 101 bins over [−3, 3] for Example 1,
/// [−25, 25] for Example 2 position and [−5, 5] for its other states.
HistogramLayout default_histogram(const ExperimentConfig& config, std::size_t state_dim);

NoiseCase parse_noise_case(const std::string& name);
ModelKind parse_model_kind(const std::string& name);

}  // namespace robustkf::cli
