#include "rate/estimator.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "rate/error.hpp"

namespace rate {

namespace detail {

bool all_equal(std::span<const double> values) {
  return std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>()) ==
         values.end();
}

std::vector<double> arrange(std::span<const double> values,
                            std::span<const std::size_t> order) {
  std::vector<double> out(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) out[j] = values[order[j]];
  return out;
}

double weighted_rate(std::span<const double> ranked_scores,
                     std::span<const RankRange> tie_groups,
                     std::span<const double> weights) {
  const std::size_t n = ranked_scores.size();
  // Centered weights annihilate constants; pin that case to exactly zero.
  if (all_equal(ranked_scores)) return 0.0;

  double total = 0.0;
  std::size_t j = 0;
  for (const RankRange& g : tie_groups) {
    for (; j < g.begin; ++j) total += weights[j] * ranked_scores[j];
    double wsum = 0.0;
    double ssum = 0.0;
    for (; j < g.end; ++j) {
      wsum += weights[j];
      ssum += ranked_scores[j];
    }
    total += wsum / static_cast<double>(g.size()) * ssum;
  }
  for (; j < n; ++j) total += weights[j] * ranked_scores[j];
  return total / static_cast<double>(n);
}

double toc_at(std::span<const double> ranked_scores,
              std::span<const RankRange> tie_groups, std::size_t m) {
  const std::size_t n = ranked_scores.size();
  if (m == n || all_equal(ranked_scores)) return 0.0;

  double total = 0.0;
  for (double s : ranked_scores) total += s;

  const RankRange* split = nullptr;
  for (const RankRange& g : tie_groups) {
    if (g.begin < m && m < g.end) {
      split = &g;
      break;
    }
  }
  double top = 0.0;
  if (split == nullptr) {
    for (std::size_t j = 0; j < m; ++j) top += ranked_scores[j];
  } else {
    for (std::size_t j = 0; j < split->begin; ++j) top += ranked_scores[j];
    double group = 0.0;
    for (std::size_t j = split->begin; j < split->end; ++j) group += ranked_scores[j];
    top += static_cast<double>(m - split->begin) / static_cast<double>(split->size()) * group;
  }
  return top / static_cast<double>(m) - total / static_cast<double>(n);
}

}  // namespace detail

namespace {

void check_sizes(const ScoreVector& scores, const PriorityRanking& ranking) {
  if (scores.size() != ranking.size()) {
    throw InvalidArgument(fmt::format("score length {} does not match ranking size {}",
                                      scores.size(), ranking.size()));
  }
}

}  // namespace

TocCurve toc_curve(const ScoreVector& scores, const PriorityRanking& ranking) {
  check_sizes(scores, ranking);
  const std::size_t n = scores.size();
  if (n == 0) throw InvalidArgument("toc_curve needs at least one score");

  TocCurve curve;
  curve.u.resize(n);
  curve.values.assign(n, 0.0);
  for (std::size_t j = 1; j <= n; ++j) curve.u[j - 1] = static_cast<double>(j) / n;

  double sum = 0.0;
  for (double s : scores.values) sum += s;
  curve.gamma_mean = sum / static_cast<double>(n);

  const std::vector<double> ranked = detail::arrange(scores.values, ranking.order);
  if (detail::all_equal(ranked)) return curve;

  // prefix[m] = sum of the top m ranked scores.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] + ranked[j];
  const double mean = prefix[n] / static_cast<double>(n);

  std::size_t g = 0;
  for (std::size_t m = 1; m < n; ++m) {
    while (g < ranking.tie_groups.size() && ranking.tie_groups[g].end <= m) ++g;
    double top = prefix[m];
    if (g < ranking.tie_groups.size()) {
      const RankRange& grp = ranking.tie_groups[g];
      if (grp.begin < m && m < grp.end) {
        top = prefix[grp.begin] + static_cast<double>(m - grp.begin) /
                                      static_cast<double>(grp.size()) *
                                      (prefix[grp.end] - prefix[grp.begin]);
      }
    }
    curve.values[m - 1] = top / static_cast<double>(m) - mean;
  }
  curve.values[n - 1] = 0.0;
  return curve;
}

double rate_point(const ScoreVector& scores, const PriorityRanking& ranking,
                  const WeightSpec& spec) {
  check_sizes(scores, ranking);
  const std::size_t n = scores.size();
  if (n < 2) throw InvalidArgument(fmt::format("rate_point needs n >= 2, got {}", n));
  const EmpiricalWeights ew = empirical_weights(spec, n);
  const std::vector<double> ranked = detail::arrange(scores.values, ranking.order);
  return detail::weighted_rate(ranked, ranking.tie_groups, ew.w);
}

double rate_difference(const ScoreVector& scores, const PriorityRanking& ranking_a,
                       const PriorityRanking& ranking_b, const WeightSpec& spec) {
  if (ranking_a.size() != ranking_b.size()) {
    throw InvalidArgument(fmt::format("ranking sizes differ: {} vs {}", ranking_a.size(),
                                      ranking_b.size()));
  }
  return rate_point(scores, ranking_a, spec) - rate_point(scores, ranking_b, spec);
}

}  // namespace rate
