#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class PartitionKind { kIid, kNonIid };

/// K client datasets forming a disjoint cover of the source dataset.
struct ClientPartition {
  std::vector<Dataset> clients;
  PartitionKind provenance = PartitionKind::kIid;

  std::size_t total_examples() const {
    std::size_t n = 0;
    for (const auto& c : clients) n += c.size();
    return n;
  }
};

/// Server-held IID holdout used by the data-sharing strategy. beta is the
/// holdout size relative to the total client examples.
struct SharedHoldout {
  Dataset examples;
  double beta = 0.0;
};

namespace detail {

// Contiguous split of a fixed example order into k nearly equal clients
// (sizes differ by at most one, larger clients first).
inline ClientPartition split_by_order(const Dataset& ds, const std::vector<std::size_t>& order,
                                      std::size_t k, PartitionKind kind) {
  const std::size_t n = order.size();
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  ClientPartition part;
  part.provenance = kind;
  part.clients.reserve(k);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t count = base + (c < extra ? 1 : 0);
    Dataset client = ds.empty_like();
    client.reserve_rows(count);
    for (std::size_t i = 0; i < count; ++i) client.append_row(ds, order[pos++]);
    part.clients.push_back(std::move(client));
  }
  return part;
}

}  // namespace detail

/// Random permutation, then contiguous equal-size split into k clients.
inline ClientPartition partition_iid(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("partition_iid: k must be >= 1");
  if (k > ds.size()) throw std::invalid_argument("partition_iid: more clients than examples");
  Rng rng(seed);
  return detail::split_by_order(ds, rng.permutation(ds.size()), k, PartitionKind::kIid);
}

/// Sort by (age_group, gender, original index), then contiguous equal-size
/// split. Deterministic: no randomness involved.
inline ClientPartition partition_noniid(const Dataset& ds, std::size_t k) {
  if (k < 1) throw std::invalid_argument("partition_noniid: k must be >= 1");
  if (k > ds.size()) throw std::invalid_argument("partition_noniid: more clients than examples");
  if (!ds.covariates) throw std::invalid_argument("partition_noniid: covariates required");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& cov = *ds.covariates;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cov.age_group[a] != cov.age_group[b]) return cov.age_group[a] < cov.age_group[b];
    if (cov.gender[a] != cov.gender[b]) return cov.gender[a] < cov.gender[b];
    return a < b;
  });
  return detail::split_by_order(ds, order, k, PartitionKind::kNonIid);
}

/// Random disjoint cover of the client indices by n_folds folds whose sizes
/// differ by at most one. Indices within each fold are sorted.
inline std::vector<std::vector<std::size_t>> make_folds(const ClientPartition& partition,
                                                        std::size_t n_folds,
                                                        std::uint64_t seed) {
  const std::size_t k = partition.clients.size();
  if (n_folds < 1) throw std::invalid_argument("make_folds: n_folds must be >= 1");
  if (n_folds > k) throw std::invalid_argument("make_folds: more folds than clients");
  Rng rng(seed);
  const auto perm = rng.permutation(k);
  const std::size_t base = k / n_folds;
  const std::size_t extra = k % n_folds;
  std::vector<std::vector<std::size_t>> folds(n_folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < n_folds; ++f) {
    const std::size_t count = base + (f < extra ? 1 : 0);
    folds[f].assign(perm.begin() + pos, perm.begin() + pos + count);
    std::sort(folds[f].begin(), folds[f].end());
    pos += count;
  }
  return folds;
}

/// Number of holdout examples each client receives for a given alpha.
inline std::size_t shared_per_client(const SharedHoldout& g, double alpha) {
  return static_cast<std::size_t>(alpha * static_cast<double>(g.examples.size()));
}

/// Distributes a random portion alpha of the holdout G to every client:
/// each client independently receives floor(alpha * |G|) examples sampled
/// without replacement within that client (draws for different clients may
/// overlap). G itself is left untouched.
inline ClientPartition share_data(const ClientPartition& partition, const SharedHoldout& g,
                                  double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("share_data: alpha must be in (0, 1]");
  if (g.examples.size() == 0) throw std::invalid_argument("share_data: empty holdout");
  const std::size_t count = shared_per_client(g, alpha);
  if (count == 0) throw std::invalid_argument("share_data: floor(alpha * |G|) is zero");

  ClientPartition out = partition;
  Rng rng(seed);
  for (auto& client : out.clients) {
    client.reserve_rows(client.size() + count);
    for (const auto idx : rng.sample_indices(g.examples.size(), count))
      client.append_row(g.examples, idx);
  }
  return out;
}

}  // namespace fedsim
