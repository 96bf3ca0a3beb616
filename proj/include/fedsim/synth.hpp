#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/nn.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

// Synthetic EHR-like cohort: binary demographic covariates, sparse binary
// drug-style features whose prevalence depends on the demographic cell, and
// a mortality label drawn from a per-cell logistic model. Sorting by the
// covariates therefore induces a real distribution shift, which is what the
// non-IID partitioner needs. The constants below were tuned once so the
// label prevalence lands near 0.3 at the default sizes.
namespace synth_detail {
inline constexpr double kBasePrevLo = 0.02;
inline constexpr double kBasePrevHi = 0.30;
inline constexpr double kCellMultLo = 0.25;
inline constexpr double kCellMultHi = 1.75;
inline constexpr double kPrevClampLo = 0.005;
inline constexpr double kPrevClampHi = 0.60;
inline constexpr double kCoefScale = 6.0;
// Per-cell label base rates, cells indexed by age_group*2 + gender.
inline constexpr double kCellLabelBase[4] = {0.20, 0.26, 0.34, 0.40};

inline double logit(double p) { return std::log(p / (1.0 - p)); }
}  // namespace synth_detail

/// n examples with d binary features, covariates and 1-based SUBJECT_IDs.
/// Fully deterministic in the seed.
inline Dataset synth_generate(std::size_t n, std::size_t d, std::uint64_t seed) {
  using namespace synth_detail;
  if (n < 1 || d < 1) throw std::invalid_argument("synth_generate: n and d must be >= 1");

  // Fixed per-cell generative profile: feature prevalences and label model.
  Rng profile_rng(derive_seed(seed, stream::kSynthProfile));
  std::vector<double> prevalence(4 * d);
  std::vector<double> coef(4 * d);
  for (std::size_t j = 0; j < d; ++j) {
    const double base = profile_rng.uniform(kBasePrevLo, kBasePrevHi);
    for (std::size_t c = 0; c < 4; ++c) {
      const double mult = profile_rng.uniform(kCellMultLo, kCellMultHi);
      prevalence[c * d + j] = std::clamp(base * mult, kPrevClampLo, kPrevClampHi);
      coef[c * d + j] =
          profile_rng.uniform(-1.0, 1.0) * kCoefScale / std::sqrt(static_cast<double>(d));
    }
  }
  double intercept[4];
  for (std::size_t c = 0; c < 4; ++c) intercept[c] = logit(kCellLabelBase[c]);

  Dataset ds;
  ds.n_features = d;
  ds.covariates = Covariates{};
  ds.ids = std::vector<std::int64_t>{};
  ds.reserve_rows(n);

  Rng row_rng(derive_seed(seed, stream::kSynthRows));
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t age = row_rng.bernoulli(0.5) ? 1 : 0;
    const std::uint8_t gender = row_rng.bernoulli(0.5) ? 1 : 0;
    const std::size_t c = static_cast<std::size_t>(age) * 2 + gender;

    // Centered linear score so the intercept pins the cell's label rate.
    double score = intercept[c];
    for (std::size_t j = 0; j < d; ++j) {
      const double p = prevalence[c * d + j];
      const std::uint8_t x = row_rng.bernoulli(p) ? 1 : 0;
      ds.features.push_back(x);
      score += coef[c * d + j] * (static_cast<double>(x) - p);
    }
    ds.labels.push_back(row_rng.bernoulli(sigmoid(score)) ? 1 : 0);
    ds.covariates->age_group.push_back(age);
    ds.covariates->gender.push_back(gender);
    ds.ids->push_back(static_cast<std::int64_t>(i) + 1);
  }
  return ds;
}

}  // namespace fedsim
