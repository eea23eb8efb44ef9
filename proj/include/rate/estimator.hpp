#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rate/model.hpp"
#include "rate/weights.hpp"

namespace rate {

// Estimated TOC on the grid u = j/n, j = 1..n. When produced with bands
// (see toc_band) the grid is the coarse band grid and ci_* are filled.
struct TocCurve {
  std::vector<double> u;
  std::vector<double> values;
  double gamma_mean = 0.0;
  std::vector<double> ci_low;
  std::vector<double> ci_high;

  bool has_bands() const { return !ci_low.empty(); }
};

// Tie-adjusted TOC: scores are averaged over each tie group in proportion to
// how much of the group lies above the cut. TOC(1) is exactly 0.
TocCurve toc_curve(const ScoreVector& scores, const PriorityRanking& ranking);

// theta = (1/n) sum_j w_n(j) Gamma_(j) with tie-averaged empirical weights.
double rate_point(const ScoreVector& scores, const PriorityRanking& ranking,
                  const WeightSpec& spec);

double rate_difference(const ScoreVector& scores, const PriorityRanking& ranking_a,
                       const PriorityRanking& ranking_b, const WeightSpec& spec);

namespace detail {

// Kernels on scores already arranged in rank order. `weights` must not yet be
// tie-averaged; `tie_groups` refer to positions in ranked_scores.
double weighted_rate(std::span<const double> ranked_scores,
                     std::span<const RankRange> tie_groups,
                     std::span<const double> weights);

// Tie-adjusted TOC at the top m of ranked_scores (1 <= m <= n).
double toc_at(std::span<const double> ranked_scores,
              std::span<const RankRange> tie_groups, std::size_t m);

bool all_equal(std::span<const double> values);

std::vector<double> arrange(std::span<const double> values,
                            std::span<const std::size_t> order);

}  // namespace detail

}  // namespace rate
