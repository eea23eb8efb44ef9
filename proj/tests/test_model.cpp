#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "rate/csv.hpp"
#include "rate/error.hpp"
#include "rate/model.hpp"
#include "rate/random.hpp"

namespace rate {
namespace {

RawColumns cols(std::initializer_list<Column> c) { return RawColumns(c); }

std::string schema_message(const RawColumns& raw) {
  try {
    validate_dataset(raw);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

TEST(ValidateDataset, MinimalInput) {
  const EvalDataset d = validate_dataset(cols({{"w", {0, 1}}, {"y", {1.0, 2.0}}}));
  EXPECT_EQ(d.n, 2u);
  EXPECT_EQ(d.treatment, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.outcome, (std::vector<double>{1.0, 2.0}));
  EXPECT_FALSE(d.propensity.has_value());
  EXPECT_FALSE(d.has_survival());
  EXPECT_EQ(d.features.cols(), 0u);
}

TEST(ValidateDataset, NonBinaryTreatmentNamesRow) {
  EXPECT_EQ(schema_message(cols({{"w", {0, 2}}, {"y", {1.0, 2.0}}})),
            "treatment not in {0,1} at row 2");
}

TEST(ValidateDataset, LengthMismatch) {
  EXPECT_NE(schema_message(cols({{"w", {0, 1}}, {"y", {1.0}}})).find("column length mismatch"),
            std::string::npos);
}

TEST(ValidateDataset, PropensityMustBeInsideUnitInterval) {
  EXPECT_EQ(schema_message(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"propensity", {0.5, 1.0}}})),
            "propensity outside (0,1) at row 2");
}

TEST(ValidateDataset, CensoringColumnsArePaired) {
  EXPECT_NE(schema_message(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"event_time", {1, 2}}}))
                .find("missing paired censoring column"),
            std::string::npos);
}

TEST(ValidateDataset, NonFiniteValues) {
  EXPECT_EQ(schema_message(cols({{"w", {0, 1}}, {"y", {1, NAN}}})),
            "non-finite value in column 'y' at row 2");
  EXPECT_EQ(schema_message(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"priority.s", {INFINITY, 1}}})),
            "non-finite value in column 'priority.s' at row 1");
}

TEST(ValidateDataset, UnknownAndDuplicateColumns) {
  EXPECT_EQ(schema_message(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"z", {1, 2}}})),
            "unknown column 'z'");
  EXPECT_EQ(schema_message(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"y", {1, 2}}})),
            "duplicate column 'y'");
}

TEST(ValidateDataset, FeaturesMustBeContiguous) {
  EXPECT_NE(schema_message(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"x2", {1, 2}}})).find("x1..xd"),
            std::string::npos);
  const EvalDataset d =
      validate_dataset(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"x2", {3, 4}}, {"x1", {5, 6}}}));
  EXPECT_EQ(d.features.cols(), 2u);
  EXPECT_EQ(d.features.at(1, 0), 6.0);
  EXPECT_EQ(d.features.at(1, 1), 4.0);
}

TEST(ValidateDataset, OutcomeDefaultsToEventTime) {
  const EvalDataset d = validate_dataset(
      cols({{"w", {0, 1}}, {"event_time", {2.5, 1.5}}, {"event_observed", {1, 0}}}));
  EXPECT_TRUE(d.has_survival());
  EXPECT_EQ(d.outcome, (std::vector<double>{2.5, 1.5}));
  EXPECT_EQ(*d.event_observed, (std::vector<int>{1, 0}));
}

TEST(ValidateDataset, MissingPropensityIsAllowed) {
  const EvalDataset d = validate_dataset(cols({{"w", {0, 1}}, {"y", {1, 2}}, {"x1", {0, 1}}}));
  EXPECT_FALSE(d.propensity.has_value());
}

TEST(RankByPriority, SortsDescending) {
  const PriorityRanking r = rank_values(std::vector<double>{0.1, 0.9, 0.5});
  EXPECT_EQ(r.order, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_TRUE(r.tie_groups.empty());
}

TEST(RankByPriority, GroupsTies) {
  const PriorityRanking r = rank_values(std::vector<double>{0.5, 0.5, 0.1});
  EXPECT_EQ(r.order, (std::vector<std::size_t>{0, 1, 2}));
  ASSERT_EQ(r.tie_groups.size(), 1u);
  EXPECT_EQ(r.tie_groups[0].begin, 0u);
  EXPECT_EQ(r.tie_groups[0].end, 2u);
}

TEST(RankByPriority, AllTied) {
  const PriorityRanking r = rank_values(std::vector<double>{3, 3, 3});
  ASSERT_EQ(r.tie_groups.size(), 1u);
  EXPECT_EQ(r.tie_groups[0].begin, 0u);
  EXPECT_EQ(r.tie_groups[0].end, 3u);
}

TEST(RankByPriority, UnknownColumn) {
  const EvalDataset d = validate_dataset(cols({{"w", {0, 1}}, {"y", {1, 2}}}));
  EXPECT_THROW(rank_by_priority(d, "s"), SchemaError);
}

TEST(RankByPriority, RowPermutationKeepsRankStructure) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> p(n);
    for (double& v : p) v = std::floor(rng.uniform() * 6.0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[perm[i]];
    const PriorityRanking a = rank_values(p);
    const PriorityRanking b = rank_values(q);
    EXPECT_EQ(a.sorted_priority, b.sorted_priority);
    ASSERT_EQ(a.tie_groups.size(), b.tie_groups.size());
    for (std::size_t g = 0; g < a.tie_groups.size(); ++g) {
      EXPECT_EQ(a.tie_groups[g].begin, b.tie_groups[g].begin);
      EXPECT_EQ(a.tie_groups[g].end, b.tie_groups[g].end);
    }
  }
}

TEST(RankByPriority, StructuralInvariants) {
  Rng rng(11);
  const std::size_t n = 200;
  std::vector<double> p(n);
  for (double& v : p) v = std::floor(rng.uniform() * 30.0);
  const PriorityRanking r = rank_values(p);
  std::vector<std::size_t> sorted = r.order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(sorted[i], i);
  for (std::size_t j = 1; j < n; ++j) EXPECT_GE(r.sorted_priority[j - 1], r.sorted_priority[j]);
  // Tie groups cover exactly the ranks whose value repeats.
  std::vector<int> covered(n, 0);
  for (const RankRange& g : r.tie_groups) {
    for (std::size_t j = g.begin; j < g.end; ++j) covered[j] = 1;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const bool repeats = (j > 0 && r.sorted_priority[j - 1] == r.sorted_priority[j]) ||
                         (j + 1 < n && r.sorted_priority[j + 1] == r.sorted_priority[j]);
    EXPECT_EQ(covered[j] == 1, repeats);
  }
}

TEST(Csv, ParsesHeaderAndRows) {
  const RawColumns c = parse_csv("w,y\n0,1.5\n1, -2e-3\n\n");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].name, "w");
  EXPECT_EQ(c[1].values, (std::vector<double>{1.5, -2e-3}));
}

TEST(Csv, RejectsBadInput) {
  EXPECT_THROW(parse_csv(""), SchemaError);
  EXPECT_THROW(parse_csv("w,y\n0,abc\n"), SchemaError);
  EXPECT_THROW(parse_csv("w,y\n0\n"), SchemaError);
}

TEST(Csv, RoundTripIsBitIdentical) {
  Rng rng(3);
  EvalDataset d;
  d.n = 300;
  d.treatment.resize(d.n);
  d.outcome.resize(d.n);
  d.features = FeatureMatrix(d.n, 2);
  std::vector<double> prio(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    d.treatment[i] = rng.bernoulli(0.5);
    d.outcome[i] = rng.normal() * std::pow(10.0, rng.normal() * 5.0);
    d.features.at(i, 0) = rng.uniform();
    d.features.at(i, 1) = -rng.uniform() * 1e-300;
    prio[i] = std::floor(rng.uniform() * 4.0) / 3.0;
  }
  d.priorities["s"] = prio;
  d.propensity = std::vector<double>(d.n, 0.3);

  const std::string text = format_csv(to_raw_columns(d));
  const EvalDataset back = validate_dataset(parse_csv(text));
  EXPECT_EQ(format_csv(to_raw_columns(back)), text);
  for (std::size_t i = 0; i < d.n; ++i) {
    EXPECT_EQ(back.outcome[i], d.outcome[i]);
    EXPECT_EQ(back.features.at(i, 1), d.features.at(i, 1));
    EXPECT_EQ(back.priority("s")[i], prio[i]);
  }
}

TEST(Csv, DecimalInputsSurviveRoundTrip) {
  const std::string text = "w,y,x1\n0,0.1,3.25\n1,1e-7,-0\n";
  const EvalDataset d = validate_dataset(parse_csv(text));
  const EvalDataset back = validate_dataset(parse_csv(format_csv(to_raw_columns(d))));
  EXPECT_EQ(back.outcome, d.outcome);
  EXPECT_EQ(back.outcome[0], 0.1);
}

TEST(SuppliedScores, RejectNonFinite) {
  EXPECT_THROW(supplied_scores({1.0, NAN}), SchemaError);
  EXPECT_EQ(supplied_scores({1.0, 2.0}).family, ScoreFamily::kSupplied);
}

}  // namespace
}  // namespace rate
