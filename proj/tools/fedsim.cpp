// Command-line experiment runner: `run` executes a cross-validated federated
// learning experiment from a flat key=value config (flags override file
// keys), `synth` writes a synthetic cohort CSV, `inspect` summarizes a CSV.
//
// Exit codes: 0 success, 2 invalid specification, 3 data error, 4 internal
// invariant violation.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "fedsim/experiment.hpp"

namespace {

constexpr int kExitInvalidSpec = 2;
constexpr int kExitDataError = 3;
constexpr int kExitInternal = 4;

struct RunFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

void add_override_option(CLI::App* cmd, RunFlags& flags, const std::string& flag,
                         const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
         flag, [&flags, key](const std::string& v) { flags.overrides[key] = v; }, help)
      ->type_name("VALUE");
}

int do_run(const RunFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!flags.config_path.empty()) kv = fedsim::load_config_file(flags.config_path);
  for (const auto& [key, value] : flags.overrides) kv[key] = value;

  const auto spec = fedsim::spec_from_kv(kv);
  spec.validate();
  if (spec.output_dir.empty())
    throw fedsim::ConfigError("an output directory is required (--out or 'out' key)");

  const auto bundle = fedsim::run_experiment(spec);
  fedsim::write_bundle(bundle, spec.output_dir);

  std::cout << "wrote " << spec.output_dir << "/results.json\n";
  if (spec.scenario.kind == fedsim::ScenarioKind::kNonIidSharing)
    std::cout << "shared examples per client: " << bundle.report.shared_per_client << " (|G| = "
              << bundle.report.shared_pool_size << ")\n";
  for (const auto& result : bundle.report.per_algorithm) {
    std::printf("%-11s mean AUC %.4f  std %.4f  average epochs %.1f\n",
                std::string(fedsim::algorithm_name(result.algorithm)).c_str(), result.mean_auc,
                result.std_auc, result.avg_epochs);
  }
  if (bundle.report.comparison) {
    const auto& c = *bundle.report.comparison;
    std::printf("wilcoxon one-sided (%s > %s): p = %.6g%s\n",
                std::string(fedsim::algorithm_name(c.favored)).c_str(),
                std::string(fedsim::algorithm_name(c.baseline)).c_str(), c.p_value,
                c.degenerate ? " (degenerate: all paired differences zero)" : "");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedsim: deterministic federated-learning simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fedsim::kToolVersion));

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run a cross-validated federated experiment");
  run->add_option("--config", run_flags.config_path, "flat key=value config file");
  add_override_option(run, run_flags, "--source", "source", "data source: synth or csv");
  add_override_option(run, run_flags, "--csv", "csv", "input CSV path (with source = csv)");
  add_override_option(run, run_flags, "--synth-n", "synth_n", "synthetic example count");
  add_override_option(run, run_flags, "--synth-d", "synth_d", "synthetic feature count");
  add_override_option(run, run_flags, "--synth-seed", "synth_seed", "synthetic data seed");
  add_override_option(run, run_flags, "--scenario", "scenario",
                      "iid, noniid, or noniid_sharing");
  add_override_option(run, run_flags, "--alpha", "alpha", "shared fraction of G per client");
  add_override_option(run, run_flags, "--beta", "beta", "|G| relative to client examples");
  add_override_option(run, run_flags, "--holdout-fraction", "holdout_fraction",
                      "slice reserved as the sharing pool");
  add_override_option(run, run_flags, "--clients", "clients", "client count K");
  add_override_option(run, run_flags, "--client-fraction", "client_fraction",
                      "per-round participation fraction C");
  add_override_option(run, run_flags, "--epochs", "epochs", "local epochs E");
  add_override_option(run, run_flags, "--batch-size", "batch_size", "minibatch size B");
  add_override_option(run, run_flags, "--rounds", "rounds", "global rounds T");
  add_override_option(run, run_flags, "--algorithms", "algorithms",
                      "comma list: fedavg,loadaboost");
  add_override_option(run, run_flags, "--folds", "folds", "cross-validation folds");
  add_override_option(run, run_flags, "--repetitions", "repetitions", "CV repetitions");
  add_override_option(run, run_flags, "--seed", "seed", "experiment seed");
  add_override_option(run, run_flags, "--paired", "paired",
                      "share run seeds across algorithms (true/false)");
  add_override_option(run, run_flags, "--jobs", "jobs", "worker threads for CV runs");
  add_override_option(run, run_flags, "--out", "out", "output directory");

  std::size_t synth_n = 27000, synth_d = 200;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort CSV");
  synth->add_option("--n", synth_n, "example count")->capture_default_str();
  synth->add_option("--d", synth_d, "feature count")->capture_default_str();
  synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "output CSV path")->required();

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "summarize a dataset CSV");
  inspect->add_option("csv", inspect_path, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidSpec;
  }

  try {
    if (run->parsed()) return do_run(run_flags);
    if (synth->parsed()) {
      const auto ds = fedsim::synth_generate(synth_n, synth_d, synth_seed);
      fedsim::write_csv(ds, synth_out);
      std::cout << "wrote " << synth_out << " (" << ds.size() << " examples, "
                << ds.n_features << " features)\n";
      return 0;
    }
    if (inspect->parsed()) {
      std::cout << fedsim::format_summary(fedsim::summarize(fedsim::load_csv(inspect_path)));
      return 0;
    }
  } catch (const fedsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidSpec;
  } catch (const fedsim::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidSpec;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInvalidSpec;
}
