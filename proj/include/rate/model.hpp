#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rate {

// Dense row-major n x d matrix of numeric features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// One named numeric column as read from (or written to) CSV.
struct Column {
  std::string name;
  std::vector<double> values;
};
using RawColumns = std::vector<Column>;

struct EvalDataset {
  std::size_t n = 0;
  std::vector<int> treatment;
  std::vector<double> outcome;
  std::optional<std::vector<double>> propensity;
  std::optional<std::vector<double>> event_time;
  std::optional<std::vector<int>> event_observed;
  FeatureMatrix features;
  std::map<std::string, std::vector<double>> priorities;
  std::optional<std::vector<double>> gamma;

  bool has_survival() const { return event_time.has_value(); }
  const std::vector<double>& priority(const std::string& name) const;
};

// Validates raw columns against the CSV schema (`w`, `y`, `propensity`,
// `event_time`, `event_observed`, `x1..xd`, `priority.<name>`, `gamma`).
// `y` may be omitted when `event_time` is present; the observed time is then
// used as the outcome. Throws SchemaError naming the column and 1-based row.
EvalDataset validate_dataset(const RawColumns& raw);

// Inverse of validate_dataset, in canonical column order.
RawColumns to_raw_columns(const EvalDataset& d);

// Half-open range [begin, end) of 0-based rank positions.
struct RankRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct PriorityRanking {
  // order[j] is the unit index at 0-based rank j (decreasing priority).
  std::vector<std::size_t> order;
  // sorted_priority[j] is the priority of unit order[j].
  std::vector<double> sorted_priority;
  // Maximal runs of equal priority with at least two members.
  std::vector<RankRange> tie_groups;

  std::size_t size() const { return order.size(); }
};

// Stable descending sort; ties are exact floating-point equality.
PriorityRanking rank_by_priority(const EvalDataset& d,
                                 const std::string& priority_name);
PriorityRanking rank_values(std::span<const double> priority);

// Maximal runs of equal consecutive values (size >= 2) in an already sorted
// sequence.
std::vector<RankRange> find_tie_groups(std::span<const double> sorted_values);

enum class ScoreFamily { kIpw, kAipwRct, kAipwObs, kAipwSurvival, kSupplied };
const char* to_string(ScoreFamily family);

enum class EndpointKind { kAbsoluteRisk, kRmst };

struct SurvivalEndpoint {
  EndpointKind kind = EndpointKind::kRmst;
  double t0 = 1.0;
};

struct FoldAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;  // 0-based fold ids
  std::uint64_t seed = 0;
};

struct ScoreVector {
  std::vector<double> values;
  ScoreFamily family = ScoreFamily::kSupplied;
  std::optional<FoldAssignment> folds;
  std::optional<SurvivalEndpoint> endpoint;
  std::size_t clipped_propensities = 0;

  std::size_t size() const { return values.size(); }
};

// Wraps precomputed scores (the `gamma` column or any finite vector).
ScoreVector supplied_scores(std::vector<double> values);

struct RateEstimate {
  std::string weight;
  double point = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  bool degenerate = false;
};

}  // namespace rate
