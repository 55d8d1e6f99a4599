#include "config_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "robustkf/error.hpp"

namespace robustkf::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigParseError, what); }

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object()) fail(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) fail("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& v, const std::string& what) {
  if (!v.is_number()) fail(what + " must be a number");
  return v.get<double>();
}

std::int64_t get_integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) fail(what + " must be an integer");
  return v.get<std::int64_t>();
}

Vector get_vector(const json& v, const std::string& what) {
  if (!v.is_array()) fail(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) out.push_back(get_number(e, what));
  return Vector(std::move(out));
}

Matrix get_matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) fail(what + " must be a non-empty array of rows");
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  if (cols == 0) fail(what + " rows must be non-empty arrays");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) fail(what + " is ragged");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = get_number(v[r][c], what);
  }
  return m;
}

MixtureNoiseSpec get_noise(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) fail(what + " must be an array with one entry per coordinate");
  MixtureNoiseSpec spec;
  for (const auto& coord : v) {
    if (!coord.is_array() || coord.empty()) fail(what + " coordinates must list components");
    std::vector<NoiseComponent> comps;
    for (const auto& c : coord) {
      reject_unknown_keys(c, {"weight", "mean", "variance"}, what);
      NoiseComponent nc;
      nc.weight = c.contains("weight") ? get_number(c["weight"], what + ".weight") : 1.0;
      nc.mean = c.contains("mean") ? get_number(c["mean"], what + ".mean") : 0.0;
      if (!c.contains("variance")) fail(what + " component needs a variance");
      nc.variance = get_number(c["variance"], what + ".variance");
      comps.push_back(nc);
    }
    spec.coordinates.push_back(std::move(comps));
  }
  return spec;
}

StepNorm parse_norm(const std::string& name) {
  if (name == "euclidean" || name == "l2") return StepNorm::Euclidean;
  if (name == "l1") return StepNorm::L1;
  if (name == "max" || name == "inf") return StepNorm::Max;
  fail("unknown step norm '" + name + "'");
}

std::string norm_name(StepNorm norm) {
  switch (norm) {
    case StepNorm::L1: return "l1";
    case StepNorm::Max: return "max";
    case StepNorm::Euclidean: break;
  }
  return "euclidean";
}

FilterSpec parse_filter(const json& v) {
  reject_unknown_keys(v, {"type", "sigma", "epsilon", "max_iterations", "norm"}, "filters[]");
  if (!v.contains("type") || !v["type"].is_string()) fail("filters[] entries need a 'type'");
  const auto type = v["type"].get<std::string>();
  FilterSpec spec;
  if (type == "kf") {
    spec.kind = FilterKind::Kalman;
    return spec;
  }
  if (type != "mckf") fail("unknown filter type '" + type + "'");
  spec.kind = FilterKind::Mckf;
  if (v.contains("sigma")) spec.kernel.sigma = get_number(v["sigma"], "sigma");
  if (v.contains("epsilon")) spec.kernel.epsilon = get_number(v["epsilon"], "epsilon");
  if (v.contains("max_iterations")) {
    spec.kernel.max_iterations = static_cast<int>(get_integer(v["max_iterations"], "max_iterations"));
  }
  if (v.contains("norm")) {
    if (!v["norm"].is_string()) fail("norm must be a string");
    spec.kernel.norm = parse_norm(v["norm"].get<std::string>());
  }
  return spec;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto span = m.row_span(r);
    rows.push_back(std::vector<double>(span.begin(), span.end()));
  }
  return rows;
}

json noise_json(const MixtureNoiseSpec& spec) {
  json coords = json::array();
  for (const auto& coord : spec.coordinates) {
    json comps = json::array();
    for (const auto& c : coord) {
      comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
    }
    coords.push_back(comps);
  }
  return coords;
}

}  // namespace

NoiseCase parse_noise_case(const std::string& name) {
  if (name == "gaussian") return NoiseCase::Gaussian;
  if (name == "impulsive" || name == "impulsive-measurement") return NoiseCase::ImpulsiveMeasurement;
  if (name == "impulsive-both") return NoiseCase::ImpulsiveBoth;
  if (name == "custom") return NoiseCase::Custom;
  fail("unknown noise case '" + name + "'");
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "example1" || name == "1") return ModelKind::Example1;
  if (name == "example2" || name == "2") return ModelKind::Example2;
  if (name == "custom") return ModelKind::Custom;
  fail("unknown model '" + name + "'");
}

FileConfig parse_config(const json& doc) {
  reject_unknown_keys(doc,
                      {"model", "theta", "dt", "custom_model", "noise", "process_noise",
                       "measurement_noise", "assumed_process_variance",
                       "assumed_measurement_variance", "runs", "steps", "seed", "filters",
                       "initial", "threads", "histogram"},
                      "config");
  FileConfig out;
  ExperimentConfig& cfg = out.experiment;
  if (doc.contains("model")) {
    if (!doc["model"].is_string()) fail("model must be a string");
    cfg.model = parse_model_kind(doc["model"].get<std::string>());
  }
  if (doc.contains("theta")) cfg.theta = get_number(doc["theta"], "theta");
  if (doc.contains("dt")) cfg.dt = get_number(doc["dt"], "dt");
  if (doc.contains("custom_model")) {
    const auto& m = doc["custom_model"];
    reject_unknown_keys(m, {"F", "H", "Q", "R"}, "custom_model");
    for (const char* key : {"F", "H", "Q", "R"}) {
      if (!m.contains(key)) fail(std::string("custom_model needs ") + key);
    }
    cfg.custom_model = StateSpaceModel{get_matrix(m["F"], "F"), get_matrix(m["H"], "H"),
                                       get_matrix(m["Q"], "Q"), get_matrix(m["R"], "R")};
  }
  if (doc.contains("noise")) {
    if (!doc["noise"].is_string()) fail("noise must be a string");
    cfg.noise = parse_noise_case(doc["noise"].get<std::string>());
  }
  if (doc.contains("process_noise")) {
    cfg.custom_process_noise = get_noise(doc["process_noise"], "process_noise");
  }
  if (doc.contains("measurement_noise")) {
    cfg.custom_measurement_noise = get_noise(doc["measurement_noise"], "measurement_noise");
  }
  if (doc.contains("assumed_process_variance")) {
    cfg.assumed_process_variance =
        get_number(doc["assumed_process_variance"], "assumed_process_variance");
  }
  if (doc.contains("assumed_measurement_variance")) {
    cfg.assumed_measurement_variance =
        get_number(doc["assumed_measurement_variance"], "assumed_measurement_variance");
  }
  if (doc.contains("runs")) cfg.runs = static_cast<int>(get_integer(doc["runs"], "runs"));
  if (doc.contains("steps")) cfg.steps = static_cast<int>(get_integer(doc["steps"], "steps"));
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      fail("seed must be a non-negative integer");
    }
    if (doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() < 0) {
      fail("seed must be a non-negative integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("filters")) {
    if (!doc["filters"].is_array()) fail("filters must be an array");
    for (const auto& f : doc["filters"]) cfg.filters.push_back(parse_filter(f));
  }
  if (doc.contains("initial")) {
    const auto& init = doc["initial"];
    reject_unknown_keys(init, {"true_state", "estimate_variance", "covariance_scale"}, "initial");
    if (init.contains("true_state")) {
      cfg.initial.true_state = get_vector(init["true_state"], "initial.true_state");
    }
    if (init.contains("estimate_variance")) {
      cfg.initial.estimate_variance = get_number(init["estimate_variance"], "estimate_variance");
    }
    if (init.contains("covariance_scale")) {
      cfg.initial.covariance_scale = get_number(init["covariance_scale"], "covariance_scale");
    }
  }
  if (doc.contains("threads")) {
    const auto t = get_integer(doc["threads"], "threads");
    if (t < 0) fail("threads must be >= 0");
    cfg.threads = static_cast<unsigned>(t);
  }
  if (doc.contains("histogram")) {
    const auto& h = doc["histogram"];
    reject_unknown_keys(h, {"bins", "range"}, "histogram");
    HistogramLayout layout;
    if (h.contains("bins")) {
      const auto bins = get_integer(h["bins"], "histogram.bins");
      if (bins < 2) fail("histogram.bins must be >= 2");
      layout.bins = static_cast<std::size_t>(bins);
    }
    if (h.contains("range")) {
      const Vector r = get_vector(h["range"], "histogram.range");
      if (r.size() != 2 || !(r[0] < r[1])) fail("histogram.range must be [lo, hi] with lo < hi");
      layout.ranges.emplace_back(r[0], r[1]);
    }
    out.histogram = layout;
  }
  return out;
}

FileConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("invalid JSON in '" + path + "': " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& config) {
  json j;
  j["model"] = to_string(config.model);
  j["theta"] = config.theta;
  j["dt"] = config.dt;
  if (config.custom_model) {
    j["custom_model"] = {{"F", matrix_json(config.custom_model->F)},
                         {"H", matrix_json(config.custom_model->H)},
                         {"Q", matrix_json(config.custom_model->Q)},
                         {"R", matrix_json(config.custom_model->R)}};
  }
  j["noise"] = to_string(config.noise);
  if (config.custom_process_noise) j["process_noise"] = noise_json(*config.custom_process_noise);
  if (config.custom_measurement_noise) {
    j["measurement_noise"] = noise_json(*config.custom_measurement_noise);
  }
  if (config.assumed_process_variance) {
    j["assumed_process_variance"] = *config.assumed_process_variance;
  }
  if (config.assumed_measurement_variance) {
    j["assumed_measurement_variance"] = *config.assumed_measurement_variance;
  }
  j["runs"] = config.runs;
  j["steps"] = config.steps;
  j["seed"] = config.seed;
  json filters = json::array();
  for (const auto& f : config.filters) {
    if (f.kind == FilterKind::Kalman) {
      filters.push_back({{"type", "kf"}});
    } else {
      filters.push_back({{"type", "mckf"},
                         {"sigma", f.kernel.sigma},
                         {"epsilon", f.kernel.epsilon},
                         {"max_iterations", f.kernel.max_iterations},
                         {"norm", norm_name(f.kernel.norm)}});
    }
  }
  j["filters"] = filters;
  j["initial"] = {{"true_state", config.initial.true_state.storage()},
                  {"estimate_variance", config.initial.estimate_variance},
                  {"covariance_scale", config.initial.covariance_scale}};
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HistogramLayout default_histogram(const ExperimentConfig& config, std::size_t state_dim) {
  HistogramLayout layout;
  layout.bins = 101;
  for (std::size_t i = 0; i < state_dim; ++i) {
    if (config.model == ModelKind::Example2) {
      layout.ranges.emplace_back(i == 0 ? -25.0 : -5.0, i == 0 ? 25.0 : 5.0);
    } else {
      layout.ranges.emplace_back(-3.0, 3.0);
    }
  }
  return layout;
}

}  // namespace robustkf::cli
