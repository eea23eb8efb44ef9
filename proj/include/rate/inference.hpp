#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rate/estimator.hpp"
#include "rate/model.hpp"
#include "rate/weights.hpp"

namespace rate {

struct BootstrapConfig {
  std::size_t replicates = 200;
  std::uint64_t seed = 42;
  double level = 0.95;  // confidence level 1 - alpha
  unsigned threads = 1;
};

// Half-sample bootstrap: each replicate draws floor(n/2) units without
// replacement, re-ranks them and recomputes the statistic. sigma* is the
// standard deviation of the replicate estimates; the p-value is
// 2 Phi(-|theta| / sigma*) and the interval theta +- z sigma*. If sigma* is 0
// the estimate is flagged degenerate and reported with p = 1.
//
// Subsets are drawn over a canonical unit order (priority, then score), so
// results do not depend on the row order of the input.
RateEstimate half_sample_bootstrap(const ScoreVector& scores,
                                   const PriorityRanking& ranking,
                                   const WeightSpec& spec,
                                   const BootstrapConfig& cfg);

// Same replicate subsets for both rules; the statistic is rate(a) - rate(b).
RateEstimate paired_bootstrap_difference(const ScoreVector& scores,
                                         const PriorityRanking& ranking_a,
                                         const PriorityRanking& ranking_b,
                                         const WeightSpec& spec,
                                         const BootstrapConfig& cfg);

// Pointwise TOC intervals on u = 0.05, 0.10, ..., 1.00.
TocCurve toc_band(const ScoreVector& scores, const PriorityRanking& ranking,
                  const BootstrapConfig& cfg);

std::vector<double> toc_band_grid();

double normal_cdf(double x);
double normal_quantile(double p);

// Builds the estimate summary from a point estimate and its replicates.
RateEstimate summarize_replicates(double point, const std::vector<double>& replicates,
                                  const BootstrapConfig& cfg);

}  // namespace rate
