#include "rate/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rate/error.hpp"

namespace rate {

namespace {

constexpr std::string_view kPriorityPrefix = "priority.";

// Parses `x<k>` with k >= 1; returns 0 if the name is not a feature column.
std::size_t feature_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 'x') return 0;
  std::size_t k = 0;
  const char* first = name.data() + 1;
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, k);
  if (ec != std::errc() || ptr != last || k == 0) return 0;
  return k;
}

void require_finite(const Column& c) {
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    if (!std::isfinite(c.values[i])) {
      throw SchemaError(fmt::format("non-finite value in column '{}' at row {}",
                                    c.name, i + 1));
    }
  }
}

std::vector<int> require_binary(const Column& c, const char* what) {
  std::vector<int> out(c.values.size());
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    const double v = c.values[i];
    if (v != 0.0 && v != 1.0) {
      throw SchemaError(fmt::format("{} not in {{0,1}} at row {}", what, i + 1));
    }
    out[i] = v == 1.0 ? 1 : 0;
  }
  return out;
}

}  // namespace

const std::vector<double>& EvalDataset::priority(const std::string& name) const {
  auto it = priorities.find(name);
  if (it == priorities.end()) {
    throw SchemaError(fmt::format("unknown priority column '{}'", name));
  }
  return it->second;
}

EvalDataset validate_dataset(const RawColumns& raw) {
  const Column* w = nullptr;
  const Column* y = nullptr;
  const Column* propensity = nullptr;
  const Column* event_time = nullptr;
  const Column* event_observed = nullptr;
  const Column* gamma = nullptr;
  std::map<std::size_t, const Column*> features;
  std::map<std::string, const Column*> priorities;

  for (const Column& c : raw) {
    const Column** slot = nullptr;
    if (c.name == "w") {
      slot = &w;
    } else if (c.name == "y") {
      slot = &y;
    } else if (c.name == "propensity") {
      slot = &propensity;
    } else if (c.name == "event_time") {
      slot = &event_time;
    } else if (c.name == "event_observed") {
      slot = &event_observed;
    } else if (c.name == "gamma") {
      slot = &gamma;
    } else if (c.name.starts_with(kPriorityPrefix) &&
               c.name.size() > kPriorityPrefix.size()) {
      auto name = c.name.substr(kPriorityPrefix.size());
      if (!priorities.emplace(name, &c).second) {
        throw SchemaError(fmt::format("duplicate column '{}'", c.name));
      }
      continue;
    } else if (std::size_t k = feature_index(c.name); k > 0) {
      if (!features.emplace(k, &c).second) {
        throw SchemaError(fmt::format("duplicate column '{}'", c.name));
      }
      continue;
    } else {
      throw SchemaError(fmt::format("unknown column '{}'", c.name));
    }
    if (*slot != nullptr) {
      throw SchemaError(fmt::format("duplicate column '{}'", c.name));
    }
    *slot = &c;
  }

  if (w == nullptr) throw SchemaError("missing required column 'w'");
  if (y == nullptr && event_time == nullptr) {
    throw SchemaError("missing required column 'y'");
  }
  if ((event_time == nullptr) != (event_observed == nullptr)) {
    throw SchemaError(
        "missing paired censoring column: 'event_time' and 'event_observed' "
        "must appear together");
  }

  const std::size_t n = w->values.size();
  for (const Column& c : raw) {
    if (c.values.size() != n) {
      throw SchemaError(fmt::format(
          "column length mismatch: '{}' has {} rows, 'w' has {}", c.name,
          c.values.size(), n));
    }
    require_finite(c);
  }
  if (n == 0) throw SchemaError("dataset has no rows");

  EvalDataset d;
  d.n = n;
  d.treatment = require_binary(*w, "treatment");
  d.outcome = y != nullptr ? y->values : event_time->values;

  if (propensity != nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
      const double e = propensity->values[i];
      if (!(e > 0.0 && e < 1.0)) {
        throw SchemaError(
            fmt::format("propensity outside (0,1) at row {}", i + 1));
      }
    }
    d.propensity = propensity->values;
  }
  if (event_time != nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
      if (event_time->values[i] < 0.0) {
        throw SchemaError(fmt::format("negative event_time at row {}", i + 1));
      }
    }
    d.event_time = event_time->values;
    d.event_observed = require_binary(*event_observed, "event_observed");
  }

  if (!features.empty()) {
    if (features.rbegin()->first != features.size()) {
      throw SchemaError("feature columns must be x1..xd without gaps");
    }
    d.features = FeatureMatrix(n, features.size());
    for (const auto& [k, col] : features) {
      for (std::size_t i = 0; i < n; ++i) d.features.at(i, k - 1) = col->values[i];
    }
  } else {
    d.features = FeatureMatrix(n, 0);
  }

  for (const auto& [name, col] : priorities) d.priorities.emplace(name, col->values);
  if (gamma != nullptr) d.gamma = gamma->values;
  return d;
}

RawColumns to_raw_columns(const EvalDataset& d) {
  RawColumns out;
  auto as_double = [](const std::vector<int>& v) {
    return std::vector<double>(v.begin(), v.end());
  };
  out.push_back({"w", as_double(d.treatment)});
  out.push_back({"y", d.outcome});
  if (d.propensity) out.push_back({"propensity", *d.propensity});
  if (d.event_time) {
    out.push_back({"event_time", *d.event_time});
    out.push_back({"event_observed", as_double(*d.event_observed)});
  }
  for (std::size_t k = 0; k < d.features.cols(); ++k) {
    Column c{fmt::format("x{}", k + 1), std::vector<double>(d.n)};
    for (std::size_t i = 0; i < d.n; ++i) c.values[i] = d.features.at(i, k);
    out.push_back(std::move(c));
  }
  for (const auto& [name, values] : d.priorities) {
    out.push_back({std::string(kPriorityPrefix) + name, values});
  }
  if (d.gamma) out.push_back({"gamma", *d.gamma});
  return out;
}

std::vector<RankRange> find_tie_groups(std::span<const double> sorted_values) {
  std::vector<RankRange> groups;
  std::size_t start = 0;
  for (std::size_t j = 1; j <= sorted_values.size(); ++j) {
    if (j == sorted_values.size() || sorted_values[j] != sorted_values[start]) {
      if (j - start >= 2) groups.push_back({start, j});
      start = j;
    }
  }
  return groups;
}

PriorityRanking rank_values(std::span<const double> priority) {
  PriorityRanking r;
  r.order.resize(priority.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return priority[a] > priority[b];
                   });
  r.sorted_priority.resize(priority.size());
  for (std::size_t j = 0; j < r.order.size(); ++j) {
    r.sorted_priority[j] = priority[r.order[j]];
  }
  r.tie_groups = find_tie_groups(r.sorted_priority);
  return r;
}

PriorityRanking rank_by_priority(const EvalDataset& d,
                                 const std::string& priority_name) {
  return rank_values(d.priority(priority_name));
}

const char* to_string(ScoreFamily family) {
  switch (family) {
    case ScoreFamily::kIpw:
      return "ipw";
    case ScoreFamily::kAipwRct:
      return "aipw_rct";
    case ScoreFamily::kAipwObs:
      return "aipw_obs";
    case ScoreFamily::kAipwSurvival:
      return "aipw_survival";
    case ScoreFamily::kSupplied:
      return "supplied";
  }
  return "unknown";
}

ScoreVector supplied_scores(std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw SchemaError(fmt::format("non-finite score at row {}", i + 1));
    }
  }
  ScoreVector s;
  s.values = std::move(values);
  s.family = ScoreFamily::kSupplied;
  return s;
}

}  // namespace rate
