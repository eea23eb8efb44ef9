#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rate/model.hpp"
#include "rate/scenario.hpp"
#include "rate/scores.hpp"

namespace rate {

struct LearnerSpec {
  enum class Kind { kRidge, kKnn, kOracle };

  Kind kind = Kind::kRidge;
  double lambda = 1.0;
  std::size_t k_neighbors = 25;

  static LearnerSpec ridge(double lambda = 1.0);
  static LearnerSpec knn(std::size_t k_neighbors = 25);

  void validate() const;
};

// A fitted regression model. Ridge standardizes features with statistics of
// the training subset and leaves the intercept unpenalized; knn averages the
// targets of the k nearest training rows (Euclidean distance, ties to the
// lower row index).
class Regressor {
 public:
  static Regressor fit(const LearnerSpec& spec, const FeatureMatrix& x,
                       std::span<const double> targets, std::span<const std::size_t> subset);

  // Predictions are clipped into (0,1).
  static Regressor fit_probability(const LearnerSpec& spec, const FeatureMatrix& x,
                                   std::span<const double> targets,
                                   std::span<const std::size_t> subset);

  std::vector<double> predict(const FeatureMatrix& x) const;
  std::vector<double> predict(const FeatureMatrix& x, std::span<const std::size_t> rows) const;
  double predict_row(std::span<const double> row) const;

 private:
  LearnerSpec spec_;
  std::size_t dim_ = 0;
  bool probability_ = false;
  // ridge
  double intercept_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<double> beta_;
  // knn
  FeatureMatrix train_x_;
  std::vector<double> train_y_;
};

// Nearest-neighbour Kaplan-Meier nuisances for censored outcomes: for each
// requested unit, the k nearest training units in its own arm give product-
// limit estimates of S_T and S_C, from which q, S_C and dLambda_C are tabled
// on `grid` up to the unit's truncated time; m(x, w) uses the k nearest
// training units of arm w.
struct SurvivalNuisances {
  std::vector<double> m0;
  std::vector<double> m1;
  std::vector<std::vector<SurvivalRow>> tables;
};

SurvivalNuisances knn_survival_nuisances(const EvalDataset& d, const SurvivalEndpoint& endpoint,
                                         std::span<const std::size_t> train,
                                         std::span<const std::size_t> eval, std::size_t k,
                                         std::span<const double> grid);

// Distinct truncated times min(U_i, t0), ascending.
std::vector<double> survival_grid(const EvalDataset& d, const SurvivalEndpoint& endpoint);

struct CrossFitOptions {
  bool fit_propensity = true;
  std::optional<SurvivalEndpoint> survival;
  unsigned threads = 1;
};

struct CrossFitResult {
  NuisanceEvaluations nuisances;
  FoldAssignment folds;
};

// Shuffles units with the seed and deals them round-robin into k folds.
FoldAssignment assign_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Every unit's nuisances come from models fit on the other k - 1 folds.
CrossFitResult cross_fit(const EvalDataset& d, std::size_t k, const LearnerSpec& learner,
                         std::uint64_t seed, const CrossFitOptions& opts = {});

struct OracleOptions {
  // Survival table grid; defaults to the distinct truncated times. Each unit's
  // own truncated time is always included.
  std::optional<std::vector<double>> grid;
};

// True nuisance functions of the scenario evaluated on the dataset.
NuisanceEvaluations oracle_nuisances(const Scenario& scenario, const EvalDataset& d,
                                     const OracleOptions& opts = {});

}  // namespace rate
