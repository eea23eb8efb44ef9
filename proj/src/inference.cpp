#include "rate/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "rate/error.hpp"
#include "rate/parallel.hpp"
#include "rate/random.hpp"

namespace rate {

namespace {

void check_config(const BootstrapConfig& cfg, std::size_t n) {
  if (cfg.replicates < 2) {
    throw InvalidArgument(fmt::format("bootstrap needs B >= 2, got {}", cfg.replicates));
  }
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
    throw InvalidArgument(fmt::format("confidence level {} outside (0,1)", cfg.level));
  }
  if (n < 4) throw InvalidArgument(fmt::format("half-sample bootstrap needs n >= 4, got {}", n));
}

// Units sorted by decreasing primary priority, then decreasing secondary
// priority (if any), then increasing score. Units that tie on every key are
// interchangeable for every statistic computed here.
std::vector<std::size_t> canonical_order(std::span<const double> primary,
                                         std::span<const double> secondary,
                                         std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (primary[a] != primary[b]) return primary[a] > primary[b];
    if (!secondary.empty() && secondary[a] != secondary[b]) return secondary[a] > secondary[b];
    return scores[a] < scores[b];
  });
  return order;
}

void check_sizes(const ScoreVector& scores, const PriorityRanking& ranking) {
  if (scores.size() != ranking.size()) {
    throw InvalidArgument(fmt::format("score length {} does not match ranking size {}",
                                      scores.size(), ranking.size()));
  }
}

// Full-sample estimate along the canonical order, so that it does not depend
// on the input row order either.
double canonical_rate(std::span<const double> scores, std::span<const double> priority,
                      std::span<const std::size_t> canonical, const WeightSpec& spec) {
  const std::vector<double> ranked = detail::arrange(scores, canonical);
  const std::vector<double> ranked_priority = detail::arrange(priority, canonical);
  return detail::weighted_rate(ranked, find_tie_groups(ranked_priority),
                               empirical_weights(spec, scores.size()).w);
}

// Recovers per-unit priorities from a ranking.
std::vector<double> unit_priorities(const PriorityRanking& ranking) {
  std::vector<double> p(ranking.size());
  for (std::size_t j = 0; j < ranking.size(); ++j) p[ranking.order[j]] = ranking.sorted_priority[j];
  return p;
}

double sample_sd(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n - 1.0));
}

// One ranked half-sample: scores and priorities along the subset.
struct HalfSample {
  std::vector<double> scores;
  std::vector<double> priority;
};

HalfSample draw(Rng& rng, std::span<const std::size_t> canonical,
                std::span<const double> scores, std::span<const double> priority,
                std::size_t half) {
  const auto positions = sample_sorted_without_replacement(rng, canonical.size(), half);
  HalfSample hs;
  hs.scores.resize(half);
  hs.priority.resize(half);
  for (std::size_t j = 0; j < half; ++j) {
    const std::size_t unit = canonical[positions[j]];
    hs.scores[j] = scores[unit];
    hs.priority[j] = priority[unit];
  }
  return hs;
}

}  // namespace

double normal_cdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

RateEstimate summarize_replicates(double point, const std::vector<double>& replicates,
                                  const BootstrapConfig& cfg) {
  RateEstimate est;
  est.point = point;
  est.replicates = replicates.size();
  est.seed = cfg.seed;
  const double sigma = sample_sd(replicates);
  est.std_error = sigma;
  if (!(sigma > 0.0)) {
    est.std_error = 0.0;
    est.degenerate = true;
    est.p_value = 1.0;
    est.ci_low = point;
    est.ci_high = point;
    return est;
  }
  const double z = normal_quantile(1.0 - (1.0 - cfg.level) / 2.0);
  est.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(point) / sigma));
  est.ci_low = point - z * sigma;
  est.ci_high = point + z * sigma;
  return est;
}

RateEstimate half_sample_bootstrap(const ScoreVector& scores,
                                   const PriorityRanking& ranking,
                                   const WeightSpec& spec,
                                   const BootstrapConfig& cfg) {
  const std::size_t n = scores.size();
  check_sizes(scores, ranking);
  check_config(cfg, n);

  const std::vector<double> priority = unit_priorities(ranking);
  const std::vector<std::size_t> canonical = canonical_order(priority, {}, scores.values);
  const double point = canonical_rate(scores.values, priority, canonical, spec);
  const std::size_t half = n / 2;
  const EmpiricalWeights base = resampled_weights(spec, half);

  std::vector<double> replicates(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::kBootstrap), b}));
    const HalfSample hs = draw(rng, canonical, scores.values, priority, half);
    replicates[b] = detail::weighted_rate(hs.scores, find_tie_groups(hs.priority), base.w);
  });

  RateEstimate est = summarize_replicates(point, replicates, cfg);
  est.weight = spec.id();
  est.n = n;
  return est;
}

RateEstimate paired_bootstrap_difference(const ScoreVector& scores,
                                         const PriorityRanking& ranking_a,
                                         const PriorityRanking& ranking_b,
                                         const WeightSpec& spec,
                                         const BootstrapConfig& cfg) {
  const std::size_t n = scores.size();
  if (ranking_a.size() != n || ranking_b.size() != n) {
    throw InvalidArgument(fmt::format("ranking sizes ({}, {}) do not match {} scores",
                                      ranking_a.size(), ranking_b.size(), n));
  }
  check_config(cfg, n);

  const std::vector<double> prio_a = unit_priorities(ranking_a);
  const std::vector<double> prio_b = unit_priorities(ranking_b);
  const std::vector<std::size_t> canon_a = canonical_order(prio_a, prio_b, scores.values);
  const std::vector<std::size_t> canon_b = canonical_order(prio_b, prio_a, scores.values);
  const double point = canonical_rate(scores.values, prio_a, canon_a, spec) -
                       canonical_rate(scores.values, prio_b, canon_b, spec);
  const std::size_t half = n / 2;
  const EmpiricalWeights base = resampled_weights(spec, half);

  std::vector<double> replicates(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::kBootstrap), b}));
    const auto positions = sample_sorted_without_replacement(rng, n, half);
    std::vector<char> chosen(n, 0);
    for (std::size_t pos : positions) chosen[canon_a[pos]] = 1;

    auto ranked_subset = [&](const std::vector<std::size_t>& canon,
                             const std::vector<double>& prio) {
      HalfSample hs;
      hs.scores.reserve(half);
      hs.priority.reserve(half);
      for (std::size_t unit : canon) {
        if (!chosen[unit]) continue;
        hs.scores.push_back(scores.values[unit]);
        hs.priority.push_back(prio[unit]);
      }
      return hs;
    };
    const HalfSample a = ranked_subset(canon_a, prio_a);
    const HalfSample bb = ranked_subset(canon_b, prio_b);
    replicates[b] = detail::weighted_rate(a.scores, find_tie_groups(a.priority), base.w) -
                    detail::weighted_rate(bb.scores, find_tie_groups(bb.priority), base.w);
  });

  RateEstimate est = summarize_replicates(point, replicates, cfg);
  est.weight = spec.id();
  est.n = n;
  return est;
}

std::vector<double> toc_band_grid() {
  std::vector<double> grid(20);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i + 1) / 20.0;
  return grid;
}

TocCurve toc_band(const ScoreVector& scores, const PriorityRanking& ranking,
                  const BootstrapConfig& cfg) {
  const std::size_t n = scores.size();
  check_sizes(scores, ranking);
  check_config(cfg, n);

  const std::vector<double> grid = toc_band_grid();
  const std::vector<double> priority = unit_priorities(ranking);
  const std::vector<std::size_t> canonical = canonical_order(priority, {}, scores.values);
  const std::vector<double> ranked = detail::arrange(scores.values, canonical);
  const std::vector<double> ranked_priority = detail::arrange(priority, canonical);
  const std::vector<RankRange> groups = find_tie_groups(ranked_priority);
  const std::size_t half = n / 2;

  // replicate_values[b * G + g]
  std::vector<double> replicate_values(cfg.replicates * grid.size());
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::kBootstrap), b}));
    const HalfSample hs = draw(rng, canonical, scores.values, priority, half);
    const auto sub_groups = find_tie_groups(hs.priority);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      replicate_values[b * grid.size() + g] =
          detail::toc_at(hs.scores, sub_groups, top_count(grid[g], half));
    }
  });

  TocCurve curve;
  curve.u = grid;
  double sum = 0.0;
  for (double s : scores.values) sum += s;
  curve.gamma_mean = sum / static_cast<double>(n);
  std::vector<double> column(cfg.replicates);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double point = detail::toc_at(ranked, groups, top_count(grid[g], n));
    for (std::size_t b = 0; b < cfg.replicates; ++b) {
      column[b] = replicate_values[b * grid.size() + g];
    }
    const RateEstimate est = summarize_replicates(point, column, cfg);
    curve.values.push_back(point);
    curve.ci_low.push_back(est.ci_low);
    curve.ci_high.push_back(est.ci_high);
  }
  return curve;
}

}  // namespace rate
