#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedsim/cross_validation.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/synth.hpp"

namespace fedsim {

inline constexpr std::string_view kToolVersion = "fedsim 0.1.0";

/// Invalid experiment specification (bad keys, values, or combinations).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSource {
  std::string csv_path;  // empty means synthetic
  std::size_t synth_n = 30000;
  std::size_t synth_d = 200;
  std::uint64_t synth_seed = 1;

  bool is_synth() const { return csv_path.empty(); }
};

/// Everything a run needs. `out` and `jobs` are execution knobs: they are
/// accepted as inputs but never echoed into config.resolved, so reruns from
/// the echo are byte-identical regardless of destination or thread count.
struct ExperimentSpec {
  DataSource data;
  Scenario scenario;
  FederationConfig federation;
  std::size_t n_folds = 10;
  std::size_t repetitions = 5;
  std::vector<Algorithm> algorithms{Algorithm::kFedAvg, Algorithm::kLoAdaBoost};
  bool paired_seeds = true;
  unsigned jobs = 1;
  std::string output_dir;

  void validate() const {
    federation.validate();
    if (n_folds < 2) throw ConfigError("folds must be >= 2");
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    const bool sharing = scenario.kind == ScenarioKind::kNonIidSharing;
    if (sharing) {
      if (!(scenario.alpha > 0.0 && scenario.alpha <= 1.0))
        throw ConfigError("noniid_sharing requires alpha in (0, 1]");
      if (!(scenario.beta > 0.0 && scenario.beta <= 1.0))
        throw ConfigError("noniid_sharing requires beta in (0, 1]");
      if (!(scenario.holdout_fraction > 0.0 && scenario.holdout_fraction < 1.0))
        throw ConfigError("holdout_fraction must be in (0, 1)");
    } else if (scenario.alpha != 0.0 || scenario.beta != 0.0) {
      throw ConfigError("alpha/beta are only valid with scenario = noniid_sharing");
    }
    if (!data.is_synth() && (data.synth_n == 0 || data.synth_d == 0))
      throw ConfigError("synth_n and synth_d must be positive");
  }
};

namespace detail {

inline std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for '" + key + "': '" + value + "'");
  }
}

inline double parse_fraction(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad number for '" + key + "': '" + value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean for '" + key + "': '" + value + "'");
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Builds a spec from flat key=value pairs; unknown keys are errors.
inline ExperimentSpec spec_from_kv(const std::map<std::string, std::string>& kv) {
  ExperimentSpec spec;
  spec.scenario.kind = ScenarioKind::kIid;
  std::string source = "synth";
  for (const auto& [key, value] : kv) {
    if (key == "source") {
      if (value != "synth" && value != "csv")
        throw ConfigError("source must be 'synth' or 'csv'");
      source = value;
    } else if (key == "csv") {
      spec.data.csv_path = value;
    } else if (key == "synth_n") {
      spec.data.synth_n = detail::parse_size(key, value);
    } else if (key == "synth_d") {
      spec.data.synth_d = detail::parse_size(key, value);
    } else if (key == "synth_seed") {
      spec.data.synth_seed = detail::parse_size(key, value);
    } else if (key == "scenario") {
      const auto kind = scenario_from_name(value);
      if (!kind) throw ConfigError("unknown scenario '" + value + "'");
      spec.scenario.kind = *kind;
    } else if (key == "alpha") {
      spec.scenario.alpha = detail::parse_fraction(key, value);
    } else if (key == "beta") {
      spec.scenario.beta = detail::parse_fraction(key, value);
    } else if (key == "holdout_fraction") {
      spec.scenario.holdout_fraction = detail::parse_fraction(key, value);
    } else if (key == "clients") {
      spec.federation.clients = detail::parse_size(key, value);
    } else if (key == "client_fraction") {
      spec.federation.client_fraction = detail::parse_fraction(key, value);
    } else if (key == "epochs") {
      spec.federation.local_epochs = static_cast<int>(detail::parse_size(key, value));
    } else if (key == "batch_size") {
      spec.federation.batch_size = static_cast<int>(detail::parse_size(key, value));
    } else if (key == "rounds") {
      spec.federation.rounds = static_cast<int>(detail::parse_size(key, value));
    } else if (key == "algorithms") {
      spec.algorithms.clear();
      std::istringstream ss(value);
      std::string name;
      while (std::getline(ss, name, ',')) {
        const auto a = algorithm_from_name(name);
        if (!a) throw ConfigError("unknown algorithm '" + name + "'");
        spec.algorithms.push_back(*a);
      }
      if (spec.algorithms.empty()) throw ConfigError("empty algorithm list");
    } else if (key == "folds") {
      spec.n_folds = detail::parse_size(key, value);
    } else if (key == "repetitions") {
      spec.repetitions = detail::parse_size(key, value);
    } else if (key == "seed") {
      spec.federation.seed = detail::parse_size(key, value);
    } else if (key == "paired") {
      spec.paired_seeds = detail::parse_bool(key, value);
    } else if (key == "jobs") {
      spec.jobs = static_cast<unsigned>(detail::parse_size(key, value));
    } else if (key == "out") {
      spec.output_dir = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (source == "synth") spec.data.csv_path.clear();
  if (source == "csv" && spec.data.csv_path.empty())
    throw ConfigError("source = csv requires a 'csv' path");
  return spec;
}

/// The echo of a spec as flat key=value pairs; inverse of spec_from_kv for
/// everything except the execution knobs (out, jobs).
inline std::map<std::string, std::string> spec_to_kv(const ExperimentSpec& spec) {
  std::map<std::string, std::string> kv;
  if (spec.data.is_synth()) {
    kv["source"] = "synth";
    kv["synth_n"] = std::to_string(spec.data.synth_n);
    kv["synth_d"] = std::to_string(spec.data.synth_d);
    kv["synth_seed"] = std::to_string(spec.data.synth_seed);
  } else {
    kv["source"] = "csv";
    kv["csv"] = spec.data.csv_path;
  }
  kv["scenario"] = std::string(scenario_name(spec.scenario.kind));
  if (spec.scenario.kind == ScenarioKind::kNonIidSharing) {
    kv["alpha"] = detail::format_double(spec.scenario.alpha);
    kv["beta"] = detail::format_double(spec.scenario.beta);
    kv["holdout_fraction"] = detail::format_double(spec.scenario.holdout_fraction);
  }
  kv["clients"] = std::to_string(spec.federation.clients);
  kv["client_fraction"] = detail::format_double(spec.federation.client_fraction);
  kv["epochs"] = std::to_string(spec.federation.local_epochs);
  kv["batch_size"] = std::to_string(spec.federation.batch_size);
  kv["rounds"] = std::to_string(spec.federation.rounds);
  std::string algos;
  for (const auto a : spec.algorithms) {
    if (!algos.empty()) algos += ',';
    algos += algorithm_name(a);
  }
  kv["algorithms"] = algos;
  kv["folds"] = std::to_string(spec.n_folds);
  kv["repetitions"] = std::to_string(spec.repetitions);
  kv["seed"] = std::to_string(spec.federation.seed);
  kv["paired"] = spec.paired_seeds ? "true" : "false";
  return kv;
}

/// Parses a flat key=value config file. '#' starts a comment; blank lines
/// are skipped; later keys override earlier ones.
inline std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

struct ResultBundle {
  ExperimentSpec resolved;
  CvReport report;
  double wall_clock_seconds = 0.0;
};

/// Loads or synthesizes the dataset named by the spec.
inline Dataset load_source(const ExperimentSpec& spec) {
  if (spec.data.is_synth())
    return synth_generate(spec.data.synth_n, spec.data.synth_d, spec.data.synth_seed);
  return load_csv(spec.data.csv_path);
}

/// Runs the full experiment (no files written).
inline ResultBundle run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();
  const Dataset dataset = load_source(spec);
  if (spec.scenario.kind != ScenarioKind::kIid && !dataset.covariates)
    throw DataError("scenario '" + std::string(scenario_name(spec.scenario.kind)) +
                    "' requires AGE_GROUP/GENDER covariates");
  ResultBundle bundle;
  bundle.resolved = spec;
  bundle.report = cross_validate(spec.federation, dataset, spec.n_folds, spec.repetitions,
                                 spec.scenario, spec.algorithms, spec.paired_seeds, spec.jobs);
  bundle.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return bundle;
}

inline nlohmann::json results_json(const ResultBundle& bundle) {
  nlohmann::json algorithms = nlohmann::json::object();
  for (const auto& result : bundle.report.per_algorithm) {
    algorithms[std::string(algorithm_name(result.algorithm))] = {
        {"mean_auc", result.mean_auc},
        {"std_auc", result.std_auc},
        {"average_epochs", result.avg_epochs},
        {"repetition_aucs", result.repetition_aucs},
        {"repetition_average_epochs", result.repetition_epochs},
    };
  }
  nlohmann::json out = {
      {"algorithms", algorithms},
      {"config", spec_to_kv(bundle.resolved)},
      {"tool", kToolVersion},
      {"wall_clock_seconds", bundle.wall_clock_seconds},
  };
  if (bundle.report.comparison) {
    const auto& c = *bundle.report.comparison;
    out["comparison"] = {
        {"alternative",
         std::string(algorithm_name(c.favored)) + " > " + std::string(algorithm_name(c.baseline))},
        {"p_value", c.p_value},
        {"degenerate", c.degenerate},
        {"exact", c.exact},
    };
  }
  if (bundle.resolved.scenario.kind == ScenarioKind::kNonIidSharing) {
    out["sharing"] = {
        {"client_pool", bundle.report.client_pool_size},
        {"holdout_pool", bundle.report.holdout_pool_size},
        {"shared_pool", bundle.report.shared_pool_size},
        {"shared_per_client", bundle.report.shared_per_client},
    };
  }
  return out;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline std::string curve_csv(const RunCurve& curve) {
  std::ostringstream out;
  out << "round,auc_raw,auc_monotone\n";
  const auto mono = monotone_max(curve.raw);
  for (std::size_t i = 0; i < curve.raw.size(); ++i)
    out << curve.raw[i].round << ',' << format_double(curve.raw[i].auc) << ','
        << format_double(mono[i].auc) << '\n';
  return out.str();
}

}  // namespace detail

/// Writes results.json, config.resolved and curves/*.csv under out_dir.
/// Everything goes to a temporary sibling first and is renamed into place on
/// success, so a failed run never leaves a partial output directory.
inline void write_bundle(const ResultBundle& bundle, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (out_dir.empty()) throw ConfigError("output directory is required");
  const fs::path out(out_dir);
  const fs::path tmp(out_dir + ".tmp");

  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp / "curves");

  detail::write_text_file(tmp / "results.json", results_json(bundle).dump(2) + "\n");

  std::string resolved;
  for (const auto& [key, value] : spec_to_kv(bundle.resolved))
    resolved += key + " = " + value + "\n";
  detail::write_text_file(tmp / "config.resolved", resolved);

  for (const auto& result : bundle.report.per_algorithm) {
    for (const auto& curve : result.curves) {
      const auto name = std::string(algorithm_name(result.algorithm)) + "_rep" +
                        std::to_string(curve.repetition) + "_fold" +
                        std::to_string(curve.fold) + ".csv";
      detail::write_text_file(tmp / "curves" / name, detail::curve_csv(curve));
    }
  }

  fs::remove_all(out, ec);
  fs::rename(tmp, out);
}

}  // namespace fedsim
