#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/metrics.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class Algorithm { kFedAvg, kLoAdaBoost };

inline std::string_view algorithm_name(Algorithm a) {
  return a == Algorithm::kFedAvg ? "fedavg" : "loadaboost";
}

inline std::optional<Algorithm> algorithm_from_name(std::string_view name) {
  if (name == "fedavg") return Algorithm::kFedAvg;
  if (name == "loadaboost") return Algorithm::kLoAdaBoost;
  return std::nullopt;
}

struct FederationConfig {
  std::size_t clients = 90;      // K
  double client_fraction = 0.1;  // C
  int local_epochs = 5;          // E
  int batch_size = 30;           // B
  int rounds = 20;               // T
  Algorithm algorithm = Algorithm::kFedAvg;
  std::uint64_t seed = 1;

  /// m = max(floor(C * K), 1): clients participating per round.
  std::size_t selected_per_round() const {
    const auto m = static_cast<std::size_t>(client_fraction * static_cast<double>(clients));
    return std::max<std::size_t>(m, 1);
  }

  void validate() const {
    if (clients < 1) throw std::invalid_argument("FederationConfig: clients must be >= 1");
    if (!(client_fraction > 0.0 && client_fraction <= 1.0))
      throw std::invalid_argument("FederationConfig: client fraction must be in (0, 1]");
    if (local_epochs < 1) throw std::invalid_argument("FederationConfig: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("FederationConfig: batch size must be >= 1");
    if (rounds < 1) throw std::invalid_argument("FederationConfig: rounds must be >= 1");
  }
};

/// What one client sends back after its local round. reported_loss is always
/// the loss measured after the initial half-epoch training, before any
/// retraining; epoch_chunks records the initial chunk and every retrain chunk.
struct ClientReport {
  std::size_t client_id = 0;
  ModelWeights weights;
  double reported_loss = 0.0;
  int epochs_used = 0;
  std::vector<int> epoch_chunks;
};

struct RoundRecord {
  int round = 0;  // 1-based
  std::vector<std::size_t> selected;
  std::vector<ClientReport> reports;  // sorted by client_id
  ModelWeights averaged;
  double median_loss = 0.0;  // median of this round's reported losses
  double test_auc = 0.0;
};

struct RunHistory {
  FederationConfig config;
  std::vector<RoundRecord> rounds;
  // Local optimizer moments are not carried across global rounds: each round
  // starts from server weights, so stale moments would mix models.
  std::string adam_state_policy = "reinitialized_each_round";
};

/// Middle order statistic; the mean of the two middle values for even counts.
inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Uniform sample of m = max(floor(C*K), 1) client ids without replacement.
inline std::vector<std::size_t> select_clients(std::size_t k, double fraction, Rng& rng) {
  const auto m = std::max<std::size_t>(
      static_cast<std::size_t>(fraction * static_cast<double>(k)), 1);
  if (m > k) throw std::invalid_argument("select_clients: m exceeds client count");
  return rng.sample_indices(k, m);
}

/// Half-epoch count E/2, rounded up for odd E.
inline int half_epochs(int local_epochs) { return (local_epochs + 1) / 2; }

/// Total local epoch budget per round: E plus the initial half, i.e. 3E/2
/// for even E and the upward-resolved integer for odd E.
inline int epoch_budget(int local_epochs) { return local_epochs + half_epochs(local_epochs); }

/// Plain FedAvg client step: E local epochs from the server weights.
inline ClientReport client_update_fedavg(const ModelWeights& w_in, std::size_t client_id,
                                         const Dataset& client_data, int local_epochs,
                                         int batch_size, Rng& rng) {
  auto state = AdamState::for_size(w_in.values.size());
  auto result = train_epochs(w_in, client_data, local_epochs, batch_size, state, rng);
  return {client_id, std::move(result.weights), result.loss, local_epochs, {local_epochs}};
}

/// Loss-based adaptive boosting client step. Trains ceil(E/2) epochs first;
/// if the resulting loss exceeds the previous round's median, keeps
/// retraining in decaying chunks of max(ceil(E/2) - r + 1, 1) epochs (round
/// r = 1, 2, ...) until the loss drops to the median or the cumulative
/// budget E + ceil(E/2) is exhausted. The final chunk is truncated so the
/// budget is never overshot. The loss sent to the server is the pre-retrain
/// loss; retraining changes only the weights and the epoch count.
inline ClientReport client_update_loadaboost(const ModelWeights& w_in, std::size_t client_id,
                                             const Dataset& client_data, int local_epochs,
                                             int batch_size, double median_loss_prev,
                                             Rng& rng) {
  if (!(median_loss_prev > 0.0))
    throw std::invalid_argument("client_update_loadaboost: previous median loss must be > 0");
  const int half = half_epochs(local_epochs);
  const int budget = epoch_budget(local_epochs);

  auto state = AdamState::for_size(w_in.values.size());
  auto current = train_epochs(w_in, client_data, half, batch_size, state, rng);
  const double initial_loss = current.loss;
  int used = half;
  std::vector<int> chunks{half};

  if (initial_loss > median_loss_prev) {
    for (int r = 1; used < budget; ++r) {
      const int chunk = std::min(std::max(half - r + 1, 1), budget - used);
      current = train_epochs(std::move(current.weights), client_data, chunk, batch_size,
                             state, rng);
      used += chunk;
      chunks.push_back(chunk);
      if (current.loss <= median_loss_prev) break;
    }
  }
  return {client_id, std::move(current.weights), initial_loss, used, std::move(chunks)};
}

struct SharingPlan {
  SharedHoldout holdout;
  double alpha = 0.0;
};

/// Full federated run. Sharing, when present, is applied once at
/// initialization. Per round: select clients, run the configured local
/// update (each client seeded by (seed, round, client id), so results do
/// not depend on execution order), average the returned weights, record the
/// median of the reported losses for the next round's gate, and evaluate the
/// averaged model's AUC on the test set. The first LoAdaBoost round gates
/// against a median loss of 1.0.
inline RunHistory run_federated(const FederationConfig& config, const ClientPartition& partition,
                                const Dataset& test, const std::optional<SharingPlan>& sharing =
                                                         std::nullopt) {
  config.validate();
  if (partition.clients.size() != config.clients)
    throw std::invalid_argument("run_federated: partition size does not match config.clients");
  if (test.size() == 0) throw std::invalid_argument("run_federated: empty test set");
  for (const auto& c : partition.clients)
    if (c.size() == 0) throw std::invalid_argument("run_federated: empty client dataset");
  if (test.n_features != partition.clients.front().n_features)
    throw std::invalid_argument("run_federated: test feature width mismatch");

  const ClientPartition* active = &partition;
  ClientPartition shared_partition;
  if (sharing) {
    shared_partition = share_data(partition, sharing->holdout, sharing->alpha,
                                  derive_seed(config.seed, stream::kShare));
    active = &shared_partition;
  }

  const auto spec = LayerSpec::with_default_hidden(active->clients.front().n_features);
  ModelWeights weights = init_weights(spec, derive_seed(config.seed, stream::kWeightInit));
  double median_loss_prev = 1.0;

  Rng selection_rng(derive_seed(config.seed, stream::kSelection));
  RunHistory history;
  history.config = config;
  history.rounds.reserve(config.rounds);

  for (int t = 1; t <= config.rounds; ++t) {
    auto selected = select_clients(config.clients, config.client_fraction, selection_rng);
    std::sort(selected.begin(), selected.end());

    std::vector<ClientReport> reports;
    reports.reserve(selected.size());
    for (const auto id : selected) {
      Rng client_rng(derive_seed(config.seed, stream::kClientUpdate,
                                 static_cast<std::uint64_t>(t), id));
      const auto& data = active->clients[id];
      reports.push_back(config.algorithm == Algorithm::kFedAvg
                            ? client_update_fedavg(weights, id, data, config.local_epochs,
                                                   config.batch_size, client_rng)
                            : client_update_loadaboost(weights, id, data, config.local_epochs,
                                                       config.batch_size, median_loss_prev,
                                                       client_rng));
    }

    std::vector<ModelWeights> returned;
    returned.reserve(reports.size());
    std::vector<double> losses;
    losses.reserve(reports.size());
    for (const auto& r : reports) {
      returned.push_back(r.weights);
      losses.push_back(r.reported_loss);
    }
    weights = average_weights(returned);
    for (const double v : weights.values)
      if (!std::isfinite(v)) throw std::logic_error("run_federated: non-finite averaged weight");
    median_loss_prev = median(losses);

    RoundRecord record;
    record.round = t;
    record.selected = selected;
    record.reports = std::move(reports);
    record.averaged = weights;
    record.median_loss = median_loss_prev;
    record.test_auc = roc_auc(forward(weights, test), test.labels);
    history.rounds.push_back(std::move(record));
  }
  return history;
}

}  // namespace fedsim
