#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fedsim {

struct CurvePoint {
  int round = 0;
  double auc = 0.0;
};

/// Area under the ROC curve via the Mann-Whitney statistic with midrank tie
/// handling: AUC = (sum of positive ranks - P(P+1)/2) / (P*Q).
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("roc_auc: scores/labels length mismatch");
  const std::size_t n = scores.size();
  if (n == 0) throw std::invalid_argument("roc_auc: empty input");

  std::size_t positives = 0;
  for (const auto y : labels) positives += y ? 1 : 0;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw std::invalid_argument("roc_auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) positive_rank_sum += midrank;
    i = j;
  }

  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

/// Running maximum of the AUC values; rounds are left unchanged.
inline std::vector<CurvePoint> monotone_max(std::vector<CurvePoint> curve) {
  double best = -std::numeric_limits<double>::infinity();
  for (auto& pt : curve) {
    best = std::max(best, pt.auc);
    pt.auc = best;
  }
  return curve;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1 denominator); 0 for a single value.
inline double sample_std(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("sample_std: empty input");
  if (v.size() == 1) return 0.0;
  const double mu = mean(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace fedsim
