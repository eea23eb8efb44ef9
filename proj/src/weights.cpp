#include "rate/weights.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rate/csv.hpp"
#include "rate/error.hpp"

namespace rate {

namespace {

void check_spec(const WeightSpec& spec) {
  if (spec.kind == WeightSpec::Kind::kHighVsOthers && !(spec.u > 0.0 && spec.u <= 1.0)) {
    throw InvalidArgument(fmt::format("high-vs-others u = {} outside (0,1]", spec.u));
  }
  if (spec.kind == WeightSpec::Kind::kCustom) {
    if (spec.alpha_grid.empty()) throw InvalidArgument("custom alpha grid is empty");
    for (double a : spec.alpha_grid) {
      if (!std::isfinite(a)) throw InvalidArgument("custom alpha grid has a non-finite entry");
    }
  }
}

// Integral of (b - a log t)^2 over [l, r], 0 <= l < r.
double integral_log_square(double b, double a, double l, double r) {
  auto antiderivative = [&](double t) {
    if (t == 0.0) return 0.0;
    const double lt = std::log(t);
    return b * b * t - 2.0 * a * b * (t * lt - t) + a * a * (t * lt * lt - 2.0 * t * lt + 2.0 * t);
  };
  return antiderivative(r) - antiderivative(l);
}

// alpha(j/n) for j = 1..n, returned 0-based.
std::vector<double> alpha_values(const WeightSpec& spec, std::size_t n, bool allow_step) {
  std::vector<double> alpha(n);
  switch (spec.kind) {
    case WeightSpec::Kind::kAutoc:
      std::fill(alpha.begin(), alpha.end(), 1.0);
      break;
    case WeightSpec::Kind::kQini:
      for (std::size_t j = 1; j <= n; ++j) alpha[j - 1] = static_cast<double>(j) / n;
      break;
    case WeightSpec::Kind::kCustom: {
      const std::size_t grid = spec.alpha_grid.size();
      if (grid == n) {
        alpha = spec.alpha_grid;
      } else if (allow_step) {
        for (std::size_t j = 1; j <= n; ++j) {
          const std::size_t idx = (j * grid + n - 1) / n;  // ceil(j N / n)
          alpha[j - 1] = spec.alpha_grid[idx - 1];
        }
      } else {
        throw InvalidArgument(fmt::format(
            "custom alpha grid has {} entries but the evaluation needs n = {}", grid, n));
      }
      break;
    }
    case WeightSpec::Kind::kHighVsOthers:
      break;
  }
  return alpha;
}

EmpiricalWeights build_weights(const WeightSpec& spec, std::size_t n, bool allow_step) {
  check_spec(spec);
  if (n < 2) throw InvalidArgument(fmt::format("empirical weights need n >= 2, got {}", n));

  EmpiricalWeights ew;
  ew.w.resize(n);
  if (spec.kind == WeightSpec::Kind::kHighVsOthers) {
    const std::size_t m = top_count(spec.u, n);
    const double top = static_cast<double>(n) / static_cast<double>(m) - 1.0;
    for (std::size_t k = 0; k < n; ++k) ew.w[k] = k < m ? top : -1.0;
  } else if (spec.kind == WeightSpec::Kind::kAutoc) {
    // H_n - H_{k-1} - 1, accumulated from the tail.
    double tail = 0.0;
    for (std::size_t k = n; k >= 1; --k) {
      tail += 1.0 / static_cast<double>(k);
      ew.w[k - 1] = tail - 1.0;
    }
  } else {
    const std::vector<double> alpha = alpha_values(spec, n, allow_step);
    double mean_alpha = 0.0;
    for (double a : alpha) mean_alpha += a;
    mean_alpha /= static_cast<double>(n);
    double tail = 0.0;
    for (std::size_t k = n; k >= 1; --k) {
      tail += alpha[k - 1] / static_cast<double>(k);
      ew.w[k - 1] = tail - mean_alpha;
    }
  }

  if (spec.rescale_to_unit_variance) {
    double mean = 0.0;
    for (double v : ew.w) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : ew.w) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd > 0.0) {
      for (double& v : ew.w) v /= sd;
    }
  }
  return ew;
}

}  // namespace

WeightSpec WeightSpec::autoc() { return WeightSpec{}; }

WeightSpec WeightSpec::qini() {
  WeightSpec s;
  s.kind = Kind::kQini;
  return s;
}

WeightSpec WeightSpec::high_vs_others(double u) {
  WeightSpec s;
  s.kind = Kind::kHighVsOthers;
  s.u = u;
  check_spec(s);
  return s;
}

WeightSpec WeightSpec::custom(std::vector<double> alpha_grid) {
  WeightSpec s;
  s.kind = Kind::kCustom;
  s.alpha_grid = std::move(alpha_grid);
  check_spec(s);
  return s;
}

WeightSpec WeightSpec::rescaled() const {
  WeightSpec s = *this;
  s.rescale_to_unit_variance = true;
  return s;
}

std::string WeightSpec::id() const {
  std::string base;
  switch (kind) {
    case Kind::kAutoc:
      base = "autoc";
      break;
    case Kind::kQini:
      base = "qini";
      break;
    case Kind::kHighVsOthers:
      base = "toc(u=" + format_double(u) + ")";
      break;
    case Kind::kCustom:
      base = "custom";
      break;
  }
  return rescale_to_unit_variance ? base + "[unit-variance]" : base;
}

std::size_t top_count(double u, std::size_t n) {
  const double un = u * static_cast<double>(n);
  const double nearest = std::round(un);
  double m = std::abs(un - nearest) <= 1e-9 * std::max(1.0, un) ? nearest : std::ceil(un);
  if (m < 1.0) m = 1.0;
  if (m > static_cast<double>(n)) m = static_cast<double>(n);
  return static_cast<std::size_t>(m);
}

double population_weight(const WeightSpec& spec, double t) {
  check_spec(spec);
  if (!(t > 0.0 && t < 1.0)) {
    throw InvalidArgument(fmt::format("population weight needs t in (0,1), got {}", t));
  }
  double w = 0.0;
  switch (spec.kind) {
    case WeightSpec::Kind::kAutoc:
      w = -std::log(t) - 1.0;
      break;
    case WeightSpec::Kind::kQini:
      w = 0.5 - t;
      break;
    case WeightSpec::Kind::kHighVsOthers:
      w = (t <= spec.u ? 1.0 / spec.u : 0.0) - 1.0;
      break;
    case WeightSpec::Kind::kCustom: {
      // Step function alpha on ((j-1)/N, j/N].
      const auto& a = spec.alpha_grid;
      const double N = static_cast<double>(a.size());
      double upper = 0.0;
      double total = 0.0;
      for (std::size_t j = 1; j <= a.size(); ++j) {
        const double left = (j - 1) / N;
        const double right = j / N;
        total += a[j - 1] / N;
        if (right <= t) continue;
        upper += a[j - 1] * std::log(right / std::max(left, t));
      }
      w = upper - total;
      break;
    }
  }
  return spec.rescale_to_unit_variance ? w / population_weight_sd(spec) : w;
}

double population_weight_sd(const WeightSpec& spec) {
  check_spec(spec);
  switch (spec.kind) {
    case WeightSpec::Kind::kAutoc:
      return 1.0;
    case WeightSpec::Kind::kQini:
      return std::sqrt(1.0 / 12.0);
    case WeightSpec::Kind::kHighVsOthers:
      return std::sqrt((1.0 - spec.u) / spec.u);
    case WeightSpec::Kind::kCustom: {
      // On piece j, w(t) = b_j - a_j log t; integrate the square exactly.
      const auto& a = spec.alpha_grid;
      const std::size_t N = a.size();
      const double total = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(N);
      double second_moment = 0.0;
      double tail = 0.0;  // integral over pieces to the right of j
      for (std::size_t j = N; j >= 1; --j) {
        const double left = static_cast<double>(j - 1) / N;
        const double right = static_cast<double>(j) / N;
        const double b = a[j - 1] * std::log(right) + tail - total;
        second_moment += integral_log_square(b, a[j - 1], left, right);
        if (left > 0.0) tail += a[j - 1] * std::log(right / left);
      }
      return std::sqrt(std::max(0.0, second_moment));
    }
  }
  return 1.0;
}

EmpiricalWeights empirical_weights(const WeightSpec& spec, std::size_t n) {
  return build_weights(spec, n, /*allow_step=*/false);
}

EmpiricalWeights resampled_weights(const WeightSpec& spec, std::size_t n) {
  return build_weights(spec, n, /*allow_step=*/true);
}

void tie_average_in_place(std::span<double> w, std::span<const RankRange> groups) {
  for (const RankRange& g : groups) {
    double sum = 0.0;
    for (std::size_t j = g.begin; j < g.end; ++j) sum += w[j];
    const double mean = sum / static_cast<double>(g.size());
    for (std::size_t j = g.begin; j < g.end; ++j) w[j] = mean;
  }
}

EmpiricalWeights tie_average_weights(EmpiricalWeights ew, const PriorityRanking& ranking) {
  if (ew.size() != ranking.size()) {
    throw InvalidArgument(fmt::format("weight length {} does not match ranking size {}",
                                      ew.size(), ranking.size()));
  }
  tie_average_in_place(ew.w, ranking.tie_groups);
  return ew;
}

}  // namespace rate
