#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fedsim/federation.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/wilcoxon.hpp"

namespace fedsim {

/// Expected epochs run on a single client over the whole process: the sum
/// over rounds of all selected clients' epochs, divided by the per-round
/// participant count m. Constant E*T for FedAvg.
inline double average_epochs(const RunHistory& history) {
  if (history.rounds.empty()) throw std::invalid_argument("average_epochs: empty history");
  std::int64_t total = 0;
  for (const auto& round : history.rounds)
    for (const auto& report : round.reports) total += report.epochs_used;
  return static_cast<double>(total) /
         static_cast<double>(history.config.selected_per_round());
}

enum class ScenarioKind { kIid, kNonIid, kNonIidSharing };

inline std::string_view scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kIid: return "iid";
    case ScenarioKind::kNonIid: return "noniid";
    default: return "noniid_sharing";
  }
}

inline std::optional<ScenarioKind> scenario_from_name(std::string_view name) {
  if (name == "iid") return ScenarioKind::kIid;
  if (name == "noniid") return ScenarioKind::kNonIid;
  if (name == "noniid_sharing") return ScenarioKind::kNonIidSharing;
  return std::nullopt;
}

struct Scenario {
  ScenarioKind kind = ScenarioKind::kIid;
  double alpha = 0.0;             // fraction of G delivered to each client
  double beta = 0.0;              // |G| relative to the total client examples
  double holdout_fraction = 0.1;  // slice reserved as the pool G is drawn from
};

/// One federated run inside the cross-validation grid.
struct RunCurve {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  Algorithm algorithm = Algorithm::kFedAvg;
  std::vector<CurvePoint> raw;     // per-round test AUC
  double convergence_auc = 0.0;    // final monotone-max value
  double avg_epochs = 0.0;
};

struct CvResult {
  Algorithm algorithm = Algorithm::kFedAvg;
  std::vector<double> repetition_aucs;    // one value per repetition
  std::vector<double> repetition_epochs;  // average epochs per repetition
  double mean_auc = 0.0;
  double std_auc = 0.0;
  double avg_epochs = 0.0;
  std::vector<RunCurve> curves;  // repetition-major, fold-minor
};

/// Paired one-sided comparison on the repetition-level AUCs.
struct PairedComparison {
  Algorithm favored = Algorithm::kLoAdaBoost;   // alternative: favored > baseline
  Algorithm baseline = Algorithm::kFedAvg;
  double p_value = 1.0;
  bool degenerate = false;
  bool exact = true;
};

struct CvReport {
  std::vector<CvResult> per_algorithm;
  std::optional<PairedComparison> comparison;
  std::size_t client_pool_size = 0;
  std::size_t holdout_pool_size = 0;
  std::size_t shared_pool_size = 0;    // |G|
  std::size_t shared_per_client = 0;   // floor(alpha * |G|)
};

namespace detail {

struct RepetitionData {
  ClientPartition partition;
  std::vector<std::vector<std::size_t>> folds;
  std::optional<SharedHoldout> holdout;
};

struct CvJob {
  std::size_t repetition = 0;
  std::size_t fold = 0;
  std::size_t algorithm_index = 0;
  std::uint64_t run_seed = 0;
};

inline Dataset subset_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
  Dataset out = ds.empty_like();
  out.reserve_rows(rows.size());
  for (const auto i : rows) out.append_row(ds, i);
  return out;
}

inline RunCurve execute_job(const CvJob& job, const FederationConfig& base,
                            const RepetitionData& rep, const Scenario& scenario,
                            Algorithm algorithm) {
  const auto& fold_clients = rep.folds[job.fold];

  Dataset test = rep.partition.clients.front().empty_like();
  for (const auto c : fold_clients)
    for (std::size_t i = 0; i < rep.partition.clients[c].size(); ++i)
      test.append_row(rep.partition.clients[c], i);

  ClientPartition train;
  train.provenance = rep.partition.provenance;
  for (std::size_t c = 0; c < rep.partition.clients.size(); ++c) {
    if (std::find(fold_clients.begin(), fold_clients.end(), c) == fold_clients.end())
      train.clients.push_back(rep.partition.clients[c]);
  }

  FederationConfig config = base;
  config.clients = train.clients.size();
  config.algorithm = algorithm;
  config.seed = job.run_seed;

  std::optional<SharingPlan> sharing;
  if (rep.holdout) sharing = SharingPlan{*rep.holdout, scenario.alpha};

  const auto history = run_federated(config, train, test, sharing);

  RunCurve curve;
  curve.repetition = job.repetition;
  curve.fold = job.fold;
  curve.algorithm = algorithm;
  curve.raw.reserve(history.rounds.size());
  for (const auto& round : history.rounds)
    curve.raw.push_back({round.round, round.test_auc});
  curve.convergence_auc = monotone_max(curve.raw).back().auc;
  curve.avg_epochs = average_epochs(history);
  return curve;
}

}  // namespace detail

/// Client-wise k-fold cross-validation with repetitions. Per repetition the
/// dataset is partitioned into base.clients clients according to the
/// scenario, the clients are split into folds, and each fold serves as the
/// test set once (its clients' pooled examples) while the remaining clients
/// train. In the sharing scenario a holdout slice is reserved first, G of
/// size floor(beta * client pool) is drawn from it, and every training run
/// distributes alpha of G to its clients at initialization. With
/// paired_seeds every algorithm sees identical run seeds (and therefore an
/// identical client-selection stream), which is what makes the Wilcoxon
/// comparison across repetition AUCs meaningful. Runs are independent; jobs
/// > 1 executes them on worker threads without changing any result.
inline CvReport cross_validate(const FederationConfig& base, const Dataset& dataset,
                               std::size_t n_folds, std::size_t repetitions,
                               const Scenario& scenario,
                               const std::vector<Algorithm>& algorithms,
                               bool paired_seeds = true, unsigned jobs = 1) {
  base.validate();
  if (algorithms.empty()) throw std::invalid_argument("cross_validate: no algorithms");
  if (repetitions < 1) throw std::invalid_argument("cross_validate: repetitions must be >= 1");
  if (n_folds < 2) throw std::invalid_argument("cross_validate: need at least two folds");
  const bool sharing = scenario.kind == ScenarioKind::kNonIidSharing;
  if (sharing && !(scenario.alpha > 0.0 && scenario.alpha <= 1.0))
    throw std::invalid_argument("cross_validate: sharing requires alpha in (0, 1]");
  if (sharing && !(scenario.beta > 0.0 && scenario.beta <= 1.0))
    throw std::invalid_argument("cross_validate: sharing requires beta in (0, 1]");
  if (sharing && !(scenario.holdout_fraction > 0.0 && scenario.holdout_fraction < 1.0))
    throw std::invalid_argument("cross_validate: holdout fraction must be in (0, 1)");

  CvReport report;

  // Per-repetition data preparation (cheap next to the training runs).
  std::vector<detail::RepetitionData> reps(repetitions);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto rep_seed = derive_seed(base.seed, stream::kRepetition, rep);
    Dataset pool;
    const Dataset* pool_ptr = &dataset;
    if (sharing) {
      const auto holdout_n =
          static_cast<std::size_t>(scenario.holdout_fraction * static_cast<double>(dataset.size()));
      if (holdout_n == 0)
        throw std::invalid_argument("cross_validate: holdout slice is empty");
      Rng holdout_rng(derive_seed(rep_seed, stream::kHoldout));
      auto hold_idx = holdout_rng.sample_indices(dataset.size(), holdout_n);
      std::sort(hold_idx.begin(), hold_idx.end());
      std::vector<std::uint8_t> is_held(dataset.size(), 0);
      for (const auto i : hold_idx) is_held[i] = 1;
      std::vector<std::size_t> pool_idx;
      pool_idx.reserve(dataset.size() - holdout_n);
      for (std::size_t i = 0; i < dataset.size(); ++i)
        if (!is_held[i]) pool_idx.push_back(i);
      pool = detail::subset_rows(dataset, pool_idx);
      const Dataset holdout_pool = detail::subset_rows(dataset, hold_idx);

      const auto g_size =
          static_cast<std::size_t>(scenario.beta * static_cast<double>(pool.size()));
      if (g_size == 0) throw std::invalid_argument("cross_validate: beta yields an empty G");
      if (g_size > holdout_pool.size())
        throw std::invalid_argument("cross_validate: holdout slice smaller than G");
      auto g_idx = holdout_rng.sample_indices(holdout_pool.size(), g_size);
      std::sort(g_idx.begin(), g_idx.end());
      reps[rep].holdout = SharedHoldout{detail::subset_rows(holdout_pool, g_idx), scenario.beta};
      pool_ptr = &pool;
      if (rep == 0) {
        report.holdout_pool_size = holdout_n;
        report.shared_pool_size = g_size;
        report.shared_per_client = shared_per_client(*reps[rep].holdout, scenario.alpha);
      }
    }
    if (rep == 0) report.client_pool_size = pool_ptr->size();

    reps[rep].partition =
        scenario.kind == ScenarioKind::kIid
            ? partition_iid(*pool_ptr, base.clients, derive_seed(rep_seed, stream::kPartition))
            : partition_noniid(*pool_ptr, base.clients);
    reps[rep].folds = make_folds(reps[rep].partition, n_folds,
                                 derive_seed(rep_seed, stream::kFolds));
  }

  // Flatten the (repetition, fold, algorithm) grid into independent jobs.
  std::vector<detail::CvJob> jobs_list;
  jobs_list.reserve(repetitions * n_folds * algorithms.size());
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto rep_seed = derive_seed(base.seed, stream::kRepetition, rep);
    for (std::size_t fold = 0; fold < n_folds; ++fold) {
      for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
        const auto run_seed = paired_seeds ? derive_seed(rep_seed, stream::kRun, fold)
                                           : derive_seed(rep_seed, stream::kRun, fold, ai + 1);
        jobs_list.push_back({rep, fold, ai, run_seed});
      }
    }
  }

  std::vector<RunCurve> curves(jobs_list.size());
  const auto worker_count = std::max(1u, std::min<unsigned>(jobs, jobs_list.size()));
  if (worker_count == 1) {
    for (std::size_t j = 0; j < jobs_list.size(); ++j)
      curves[j] = detail::execute_job(jobs_list[j], base, reps[jobs_list[j].repetition],
                                      scenario, algorithms[jobs_list[j].algorithm_index]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (unsigned w = 0; w < worker_count; ++w) {
      workers.emplace_back([&] {
        for (std::size_t j = next.fetch_add(1); j < jobs_list.size(); j = next.fetch_add(1))
          curves[j] = detail::execute_job(jobs_list[j], base, reps[jobs_list[j].repetition],
                                          scenario, algorithms[jobs_list[j].algorithm_index]);
      });
    }
    for (auto& w : workers) w.join();
  }

  // Aggregate: repetition value = mean over folds, then mean/std over
  // repetitions.
  report.per_algorithm.resize(algorithms.size());
  for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
    auto& result = report.per_algorithm[ai];
    result.algorithm = algorithms[ai];
    result.repetition_aucs.resize(repetitions);
    result.repetition_epochs.resize(repetitions);
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
      std::vector<double> fold_aucs, fold_epochs;
      for (std::size_t j = 0; j < jobs_list.size(); ++j) {
        if (jobs_list[j].algorithm_index != ai || jobs_list[j].repetition != rep) continue;
        fold_aucs.push_back(curves[j].convergence_auc);
        fold_epochs.push_back(curves[j].avg_epochs);
        result.curves.push_back(curves[j]);
      }
      result.repetition_aucs[rep] = mean(fold_aucs);
      result.repetition_epochs[rep] = mean(fold_epochs);
    }
    result.mean_auc = mean(result.repetition_aucs);
    result.std_auc = sample_std(result.repetition_aucs);
    result.avg_epochs = mean(result.repetition_epochs);
  }

  // Paired test when both algorithms were run: alternative LoAdaBoost > FedAvg.
  std::optional<std::size_t> fed_i, loada_i;
  for (std::size_t ai = 0; ai < algorithms.size(); ++ai) {
    if (algorithms[ai] == Algorithm::kFedAvg) fed_i = ai;
    if (algorithms[ai] == Algorithm::kLoAdaBoost) loada_i = ai;
  }
  if (fed_i && loada_i) {
    const auto w = wilcoxon_signed_rank(report.per_algorithm[*loada_i].repetition_aucs,
                                        report.per_algorithm[*fed_i].repetition_aucs);
    report.comparison = PairedComparison{Algorithm::kLoAdaBoost, Algorithm::kFedAvg,
                                         w.p_value, w.degenerate, w.exact};
  }
  return report;
}

}  // namespace fedsim
