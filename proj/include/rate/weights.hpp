#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rate/model.hpp"

namespace rate {

// A RATE weighting alpha(u) on (0, 1].
//
//   autoc               alpha(u) = 1
//   qini                alpha(u) = u
//   high_vs_others(u)   point mass at u, i.e. the TOC at u
//   custom              alpha tabulated at u = j/N, j = 1..N
//
// With rescale_to_unit_variance the weights are divided by their standard
// deviation (empirical for finite n, population for population_weight).
struct WeightSpec {
  enum class Kind { kAutoc, kQini, kHighVsOthers, kCustom };

  Kind kind = Kind::kAutoc;
  double u = 1.0;
  std::vector<double> alpha_grid;
  bool rescale_to_unit_variance = false;

  static WeightSpec autoc();
  static WeightSpec qini();
  static WeightSpec high_vs_others(double u);
  static WeightSpec custom(std::vector<double> alpha_grid);

  WeightSpec rescaled() const;

  // Short stable identifier, e.g. "autoc", "qini", "toc(u=0.25)".
  std::string id() const;
};

struct EmpiricalWeights {
  std::vector<double> w;  // w[j] applies to 0-based rank j
  std::size_t size() const { return w.size(); }
};

// w(t) = integral_t^1 alpha(u)/u du - integral_0^1 alpha(u) du, for t in (0,1).
double population_weight(const WeightSpec& spec, double t);

// Population standard deviation of w(U) for U ~ Unif(0,1).
double population_weight_sd(const WeightSpec& spec);

// w_n(k) = sum_{j >= k} alpha(j/n)/j - (1/n) sum_j alpha(j/n), which makes
// (1/n) sum_j w_n(j) Gamma_(j) equal (1/n) sum_j alpha(j/n) TOC(j/n) exactly.
// Custom grids must have exactly n entries.
EmpiricalWeights empirical_weights(const WeightSpec& spec, std::size_t n);

// Same as empirical_weights, but a custom grid of size N != n is read as the
// step function alpha(u) = grid[ceil(uN)]. Used for half-sample replicates.
EmpiricalWeights resampled_weights(const WeightSpec& spec, std::size_t n);

// Replaces weights within each tie group by their group mean.
EmpiricalWeights tie_average_weights(EmpiricalWeights ew,
                                     const PriorityRanking& ranking);
void tie_average_in_place(std::span<double> w, std::span<const RankRange> groups);

// m = ceil(u n), robust to representation error in u * n; clamped to [1, n].
std::size_t top_count(double u, std::size_t n);

}  // namespace rate
