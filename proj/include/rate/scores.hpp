#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rate/model.hpp"

namespace rate {

// One grid point of a unit's censoring tables: q(s), S_C(s) = P(C >= s) and
// the censoring hazard mass dLambda_C(s).
struct SurvivalRow {
  double s = 0.0;
  double q = 0.0;
  double sc = 1.0;
  double dlambda = 0.0;
};

struct NuisanceEvaluations {
  std::vector<double> m0;
  std::vector<double> m1;
  std::optional<std::vector<double>> e_hat;
  // Per unit, grid points in strictly increasing s (survival scores only).
  std::vector<std::vector<SurvivalRow>> survival;

  std::size_t size() const { return m0.size(); }
};

struct ScoreOptions {
  double e_min = 0.01;  // propensities are clipped to [e_min, 1 - e_min]
  double s_min = 0.05;  // censoring survival floor
};

// Gamma_i = W Y / pi - (1 - W) Y / (1 - pi).
ScoreVector ipw_scores(const EvalDataset& d, double pi);

// Gamma_i = m1 - m0 + (W - pi) / (pi (1 - pi)) (Y - m_W).
ScoreVector aipw_rct_scores(const EvalDataset& d, double pi, const NuisanceEvaluations& nuis);

// As aipw_rct_scores with pi replaced by the clipped e_hat(X_i).
ScoreVector aipw_obs_scores(const EvalDataset& d, const NuisanceEvaluations& nuis,
                            const ScoreOptions& opts = {});

struct TransformedOutcome {
  std::vector<double> u_tilde;    // min(U, t0)
  std::vector<int> delta_tilde;   // 1 if the event is seen or follow-up passes t0
  std::vector<double> y;          // endpoint outcome
};

TransformedOutcome transform_survival_outcome(const EvalDataset& d,
                                              const SurvivalEndpoint& endpoint);

// Censoring-adjusted AIPW score:
//
//   m1 - m0 + (W - e) / (e (1 - e)) * [ (D~ Y + (1 - D~) q(U~)) / S_C(U~)
//                                       - sum_{s_k <= U~} q_k / S_C(s_k) dLambda_k
//                                       - m_W ]
//
// q(U~) and S_C(U~) are read from the last table row with s <= U~.
ScoreVector aipw_survival_scores(const EvalDataset& d, const SurvivalEndpoint& endpoint,
                                 const NuisanceEvaluations& nuis,
                                 const ScoreOptions& opts = {});

}  // namespace rate
