#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace fedsim {

struct WilcoxonResult {
  double p_value = 1.0;
  bool degenerate = false;  // every paired difference was zero
  bool exact = true;        // enumeration rather than normal approximation
};

// Exact enumeration is used up to this many nonzero differences; beyond it
// the normal approximation with tie correction takes over.
inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// One-sided Wilcoxon signed-rank test of the alternative "a > b".
/// Zero differences are dropped; tied magnitudes get midranks. For n <= 20
/// nonzero differences the p-value is the exact tail probability of the
/// positive-rank sum over all 2^n sign assignments. Degenerate input (all
/// differences zero) reports p = 1 with the flag set.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: length mismatch");
  if (a.empty()) throw std::invalid_argument("wilcoxon: empty input");

  std::vector<double> diff;
  diff.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) diff.push_back(a[i] - b[i]);
  if (diff.empty()) return {1.0, true, true};

  const std::size_t n = diff.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(diff[x]) < std::abs(diff[y]);
  });

  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && std::abs(diff[order[j]]) == std::abs(diff[order[i]])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = midrank;
    i = j;
  }

  double w_pos = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (diff[k] > 0.0) w_pos += rank[k];

  if (n <= kWilcoxonExactLimit) {
    // Ranks are multiples of 1/2, so the sums below are exact in doubles.
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t at_least = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (mask & (std::uint64_t{1} << k)) s += rank[k];
      if (s >= w_pos - 1e-12) ++at_least;
    }
    return {static_cast<double>(at_least) / static_cast<double>(total), false, true};
  }

  // Large-sample tail with tie correction and continuity correction.
  const double dn = static_cast<double>(n);
  const double mu = dn * (dn + 1.0) / 4.0;
  double tie_term = 0.0;
  i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && std::abs(diff[order[j]]) == std::abs(diff[order[i]])) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  const double z = (w_pos - mu - 0.5) / std::sqrt(var);
  const double p = 0.5 * std::erfc(z / std::sqrt(2.0));
  return {std::clamp(p, 0.0, 1.0), false, false};
}

}  // namespace fedsim
