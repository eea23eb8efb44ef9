#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rate/model.hpp"
#include "rate/scenario.hpp"
#include "rate/weights.hpp"

namespace rate {

struct GeneratedData {
  EvalDataset data;
  std::vector<double> tau;  // true CATE per unit
};

// Draws one dataset from the scenario using scenario.seed. Bundled priority
// columns:
//   kink      "s" (= 1 - X), "random"
//   setup_a   "oracle" (true tau), "plugin" (knn m1 - m0 fit on an
//             independent training draw), "risk" (the same fit's m0), "random"
//   survival  "oracle" (true tau for the endpoint), "random"
GeneratedData generate(const Scenario& scenario);

// Scores used by the power study: IPW with pi = 1/2 for kink, cross-fit knn
// AIPW for setup_a, oracle-nuisance survival AIPW for survival.
ScoreVector simulation_scores(const Scenario& scenario, const GeneratedData& g,
                              std::uint64_t seed);

struct TrueRate {
  double value = 0.0;
  double mc_se = 0.0;
};

// Monte Carlo value of E[w(1 - F_S(S(X))) tau(X)] for one of the scenario's
// closed-form rules ("s" or "random" for kink, "oracle" or "random"
// otherwise). For kink with rule "s" the quantile is exact (1 - F_S(S(X)) = X);
// otherwise it is the empirical rank (j - 1/2) / draws.
TrueRate true_rate(const Scenario& scenario, const std::string& rule, const WeightSpec& spec,
                   std::size_t draws = 1'000'000, std::uint64_t seed = 20220101);

struct PowerCell {
  Scenario scenario;
  std::string rule;
};

struct PowerConfig {
  std::size_t reps = 1000;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 42;
  double alpha = 0.05;
  unsigned threads = 1;
};

struct PowerRow {
  std::string scenario;
  std::string param;
  std::string weight;
  std::size_t reps = 0;
  double power = 0.0;
  double mean_estimate = 0.0;
  double mean_se = 0.0;
};

struct PowerReport {
  std::vector<PowerRow> rows;

  // scenario,param,weight,reps,power,mean_estimate,mean_se
  std::string to_csv() const;
};

// One row per (cell, weight): the fraction of reps whose half-sample
// bootstrap p-value falls below alpha.
PowerReport power_study(const std::vector<PowerCell>& cells, const std::vector<WeightSpec>& specs,
                        const PowerConfig& cfg);

std::string cell_param(const PowerCell& cell);

}  // namespace rate
