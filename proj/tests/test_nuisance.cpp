#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rate/error.hpp"
#include "rate/inference.hpp"
#include "rate/nuisance.hpp"
#include "rate/scenario.hpp"
#include "rate/scores.hpp"
#include "rate/simulate.hpp"

namespace rate {
namespace {

struct Design {
  FeatureMatrix x;
  std::vector<double> y;
  std::vector<std::size_t> all;
};

Design random_design(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Design out{FeatureMatrix(n, d), std::vector<double>(n), std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double lin = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      out.x.at(i, c) = rng.normal() * static_cast<double>(c + 1) + static_cast<double>(c);
      lin += out.x.at(i, c) * (c % 2 == 0 ? 1.0 : -0.5);
    }
    out.y[i] = lin + rng.normal();
  }
  std::iota(out.all.begin(), out.all.end(), std::size_t{0});
  return out;
}

TEST(Ridge, ConstantTarget) {
  const Design d = random_design(50, 3, 1);
  const std::vector<double> c(50, -3.25);
  const Regressor r = Regressor::fit(LearnerSpec::ridge(0.7), d.x, c, d.all);
  for (double p : r.predict(d.x)) EXPECT_NEAR(p, -3.25, 1e-12);
}

TEST(Ridge, HeavyPenaltyGivesTrainingMean) {
  const Design d = random_design(60, 4, 2);
  const std::vector<std::size_t> subset(d.all.begin(), d.all.begin() + 30);
  double mean = 0.0;
  for (std::size_t i : subset) mean += d.y[i];
  mean /= 30.0;
  const Regressor r = Regressor::fit(LearnerSpec::ridge(1e12), d.x, d.y, subset);
  for (double p : r.predict(d.x)) EXPECT_NEAR(p, mean, 1e-8);
}

TEST(Ridge, SmallPenaltyRecoversLinearFit) {
  Design d = random_design(200, 2, 3);
  for (std::size_t i = 0; i < 200; ++i) d.y[i] = 1.5 + 2.0 * d.x.at(i, 0) - d.x.at(i, 1);
  const Regressor r = Regressor::fit(LearnerSpec::ridge(1e-9), d.x, d.y, d.all);
  const auto p = r.predict(d.x);
  for (std::size_t i = 0; i < 200; ++i) EXPECT_NEAR(p[i], d.y[i], 1e-6);
}

TEST(Ridge, AffineEquivariance) {
  const Design d = random_design(80, 5, 4);
  const double a = -2.5, b = 7.0;
  std::vector<double> ty(d.y);
  for (double& v : ty) v = a * v + b;
  const auto p = Regressor::fit(LearnerSpec::ridge(3.0), d.x, d.y, d.all).predict(d.x);
  const auto q = Regressor::fit(LearnerSpec::ridge(3.0), d.x, ty, d.all).predict(d.x);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(q[i], a * p[i] + b, 1e-10);
}

TEST(Ridge, UsesOnlyTrainingRows) {
  const Design d = random_design(40, 2, 5);
  const std::vector<std::size_t> subset = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  Design changed = d;
  for (std::size_t i = 10; i < 40; ++i) {
    changed.y[i] += 100.0;
    changed.x.at(i, 0) *= 50.0;
  }
  const auto p = Regressor::fit(LearnerSpec::ridge(), d.x, d.y, subset).predict(d.x, subset);
  const auto q =
      Regressor::fit(LearnerSpec::ridge(), changed.x, changed.y, subset).predict(changed.x, subset);
  EXPECT_EQ(p, q);
}

TEST(Knn, OneNeighbourReturnsOwnTarget) {
  const Design d = random_design(30, 3, 6);
  const Regressor r = Regressor::fit(LearnerSpec::knn(1), d.x, d.y, d.all);
  EXPECT_EQ(r.predict(d.x), d.y);
}

TEST(Knn, AveragesNearestAndBreaksTiesByIndex) {
  FeatureMatrix x(4, 1);
  x.at(0, 0) = 0.0;
  x.at(1, 0) = 2.0;
  x.at(2, 0) = -2.0;
  x.at(3, 0) = 5.0;
  const std::vector<double> y = {1.0, 10.0, 100.0, 1000.0};
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  const Regressor r = Regressor::fit(LearnerSpec::knn(2), x, y, all);
  // From 0: distance 0 to row 0, then rows 1 and 2 tie at 2; row 1 wins.
  EXPECT_DOUBLE_EQ(r.predict_row(std::vector<double>{0.0}), 5.5);
  const Regressor big = Regressor::fit(LearnerSpec::knn(10), x, y, all);
  EXPECT_DOUBLE_EQ(big.predict_row(std::vector<double>{0.0}), 1111.0 / 4.0);
}

TEST(Learners, ProbabilityFitIsClipped) {
  const Design d = random_design(40, 2, 7);
  const std::vector<double> ones(40, 1.0);
  const Regressor r = Regressor::fit_probability(LearnerSpec::ridge(), d.x, ones, d.all);
  for (double p : r.predict(d.x)) {
    EXPECT_LT(p, 1.0);
    EXPECT_GT(p, 0.99);
  }
}

TEST(Learners, Errors) {
  const Design d = random_design(10, 2, 8);
  EXPECT_THROW(LearnerSpec::ridge(0.0).validate(), InvalidArgument);
  EXPECT_THROW(LearnerSpec::knn(0).validate(), InvalidArgument);
  EXPECT_THROW(Regressor::fit(LearnerSpec::ridge(), d.x, d.y, std::vector<std::size_t>{}),
               InvalidArgument);
  std::vector<double> bad = d.y;
  bad[3] = NAN;
  EXPECT_THROW(Regressor::fit(LearnerSpec::ridge(), d.x, bad, d.all), InvalidArgument);
  const Regressor r = Regressor::fit(LearnerSpec::ridge(), d.x, d.y, d.all);
  EXPECT_THROW(r.predict(FeatureMatrix(3, 4)), InvalidArgument);
}

TEST(ClosedForms, ScenarioExamples) {
  EXPECT_DOUBLE_EQ(closed_form::survival_propensity(0.0), 0.25);
  EXPECT_DOUBLE_EQ(closed_form::survival_propensity(1.0), 0.25);
  // (1 + 20 x (1 - x)^3) / 4 is the Beta(2,4) density form.
  EXPECT_NEAR(closed_form::survival_propensity(0.25), (1.0 + 20 * 0.25 * std::pow(0.75, 3)) / 4,
              1e-15);
  const double x1 = 0.1, x2 = std::asin(0.05) / std::numbers::pi / x1;
  EXPECT_DOUBLE_EQ(closed_form::setup_a_propensity(x1, x2), 0.1);
  EXPECT_DOUBLE_EQ(closed_form::setup_a_propensity(0.5, 1.0), 0.9);
  EXPECT_NEAR(closed_form::setup_a_baseline(std::vector<double>{0.5, 1, 0.5, 0, 0}), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(closed_form::kink_mu1(0.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(closed_form::kink_mu1(0.2, 0.1), 0.0);
}

TEST(ClosedForms, SurvivalQuantitiesMatchQuadrature) {
  for (const SurvivalEndpoint ep :
       {SurvivalEndpoint{EndpointKind::kRmst, 1.0}, SurvivalEndpoint{EndpointKind::kRmst, 2.5},
        SurvivalEndpoint{EndpointKind::kAbsoluteRisk, 1.0}}) {
    for (double x1 : {0.1, 0.8}) {
      for (double x2 : {0.2, 0.9}) {
        for (int w : {0, 1}) {
          auto st = [&](double t) { return closed_form::survival_event_survival(t, x1, x2, w); };
          for (double s : {0.0, 0.3, 0.9}) {
            if (s >= ep.t0) continue;
            double expected;
            if (ep.kind == EndpointKind::kRmst) {
              // t = v^2 removes the square-root singularity at 0.
              auto integrand = [&](double v) { return st(v * v) * 2.0 * v; };
              expected = s + oracle::simpson(integrand, std::sqrt(s), std::sqrt(ep.t0)) / st(s);
            } else {
              expected = 1.0 - st(ep.t0) / st(s);
            }
            EXPECT_NEAR(closed_form::survival_q(s, x1, x2, w, ep), expected, 1e-9);
          }
          EXPECT_EQ(closed_form::survival_q(ep.t0 + 1.0, x1, x2, w, ep),
                    ep.kind == EndpointKind::kRmst ? ep.t0 : 0.0);
          EXPECT_DOUBLE_EQ(closed_form::survival_m(x1, x2, w, ep),
                           closed_form::survival_q(0.0, x1, x2, w, ep));
        }
        EXPECT_DOUBLE_EQ(closed_form::survival_tau(x1, x2, ep),
                         closed_form::survival_m(x1, x2, 1, ep) -
                             closed_form::survival_m(x1, x2, 0, ep));
      }
    }
  }
}

TEST(ClosedForms, SurvivalCurvesMatchSimulation) {
  // Empirical P(T > t) and P(C >= s) against the closed forms at one x.
  Rng rng(10);
  const double x1 = 0.4, x2 = 0.7, x3 = 0.3;
  const int w = 1;
  const std::size_t draws = 200000;
  std::size_t t_above = 0, c_above = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double t = std::pow(-std::log(rng.uniform_open()) / std::exp(x1 + (-0.4 + x2) * w), 2);
    const double c = std::exp(x1 - x3 * w + rng.normal());
    if (t > 0.5) ++t_above;
    if (c >= 0.8) ++c_above;
  }
  const double tol = 4.0 * std::sqrt(0.25 / draws);
  EXPECT_NEAR(static_cast<double>(t_above) / draws,
              closed_form::survival_event_survival(0.5, x1, x2, w), tol);
  EXPECT_NEAR(static_cast<double>(c_above) / draws,
              closed_form::survival_censoring_survival(0.8, x1, x3, w), tol);
}

TEST(OracleNuisances, KinkAndSetupA) {
  Scenario kink = Scenario::kink(0.5, 50);
  const GeneratedData g = generate(kink);
  const NuisanceEvaluations n = oracle_nuisances(kink, g.data);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(n.m0[i], 0.0);
    EXPECT_EQ(n.m1[i], closed_form::kink_mu1(g.data.features.at(i, 0), 0.5));
    EXPECT_EQ((*n.e_hat)[i], 0.5);
    EXPECT_DOUBLE_EQ(n.m1[i] - n.m0[i], g.tau[i]);
  }

  Scenario a = Scenario::setup_a(0.3, 100);
  const GeneratedData ga = generate(a);
  const NuisanceEvaluations na = oracle_nuisances(a, ga.data);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_NEAR(na.m1[i] - na.m0[i], ga.tau[i], 1e-12);
    EXPECT_GE((*na.e_hat)[i], 0.1);
    EXPECT_LE((*na.e_hat)[i], 0.9);
  }
}

TEST(OracleNuisances, ScenarioMismatch) {
  const GeneratedData g = generate(Scenario::kink(1.0, 20));
  EXPECT_THROW(oracle_nuisances(Scenario::setup_a(1.0, 20), g.data), InvalidArgument);
  EXPECT_THROW(oracle_nuisances(Scenario::survival(20), g.data), InvalidArgument);
  const GeneratedData s = generate(Scenario::survival(20));
  EXPECT_THROW(oracle_nuisances(Scenario::kink(1.0, 20), s.data), InvalidArgument);
}

TEST(OracleNuisances, SurvivalTables) {
  const Scenario sc = Scenario::survival(300);
  const GeneratedData g = generate(sc);
  const NuisanceEvaluations n = oracle_nuisances(sc, g.data);
  const TransformedOutcome t = transform_survival_outcome(g.data, sc.endpoint);
  for (std::size_t i = 0; i < 300; ++i) {
    const auto& rows = n.survival[i];
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows.back().s, t.u_tilde[i]);
    double prev = 1.0;
    for (const SurvivalRow& r : rows) {
      EXPECT_LE(r.sc, prev);
      EXPECT_NEAR(r.dlambda, 1.0 - r.sc / prev, 1e-15);
      prev = r.sc;
    }
    EXPECT_NEAR(n.m1[i] - n.m0[i], g.tau[i], 1e-12);
  }
  OracleOptions bad;
  bad.grid = std::vector<double>{0.5, 0.2};
  EXPECT_THROW(oracle_nuisances(sc, g.data, bad), InvalidArgument);
}

TEST(KnnSurvival, NoCensoringGivesEmpiricalQuantities) {
  // Without censoring the product-limit curve is the empirical survival
  // function, so S_C = 1, dLambda = 0 and m is the mean truncated outcome.
  const std::vector<double> u = {0.2, 0.5, 0.9, 1.4, 0.3, 0.7, 1.1, 2.0};
  const std::vector<double> w = {0, 0, 0, 0, 1, 1, 1, 1};
  const EvalDataset d = validate_dataset(
      {{"w", w}, {"event_time", u}, {"event_observed", std::vector<double>(8, 1.0)},
       {"x1", std::vector<double>(8, 0.0)}});
  const SurvivalEndpoint ep{EndpointKind::kRmst, 1.0};
  std::vector<std::size_t> all(8);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto grid = survival_grid(d, ep);
  const SurvivalNuisances s = knn_survival_nuisances(d, ep, all, all, 4, grid);
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_NEAR(s.m0[j], (0.2 + 0.5 + 0.9 + 1.0) / 4, 1e-15);
    EXPECT_NEAR(s.m1[j], (0.3 + 0.7 + 1.0 + 1.0) / 4, 1e-15);
    for (const SurvivalRow& r : s.tables[j]) {
      EXPECT_EQ(r.sc, 1.0);
      EXPECT_EQ(r.dlambda, 0.0);
    }
  }
  // Unit 1 (arm 0, U = 0.5): q(0.5) = E[min(T,1) | T >= 0.5] = (0.5 + 0.9 + 1) / 3.
  EXPECT_NEAR(s.tables[1].back().q, 2.4 / 3, 1e-15);

  const SurvivalEndpoint risk{EndpointKind::kAbsoluteRisk, 1.0};
  const SurvivalNuisances r = knn_survival_nuisances(d, risk, all, all, 4, grid);
  EXPECT_NEAR(r.m0[0], 0.75, 1e-15);
  EXPECT_NEAR(r.m1[0], 0.5, 1e-15);
}

TEST(OracleNuisances, SurvivalScoresAreConditionallyUnbiased) {
  // Regress Gamma* - tau on tau over 10^5 oracle-nuisance scores and test that
  // intercept and slope are zero.
  const std::size_t chunks = 20, chunk = 5000;
  std::vector<double> grid;
  for (std::size_t k = 1; k <= 400; ++k) grid.push_back(static_cast<double>(k) / 400.0);
  grid.pop_back();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    Scenario sc = Scenario::survival(chunk);
    sc.seed = 1000 + c;
    const GeneratedData g = generate(sc);
    OracleOptions opts;
    opts.grid = grid;
    const ScoreVector s =
        aipw_survival_scores(g.data, sc.endpoint, oracle_nuisances(sc, g.data, opts));
    for (std::size_t i = 0; i < chunk; ++i) {
      const double x = g.tau[i];
      const double y = s.values[i] - g.tau[i];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
      ++n;
    }
  }
  const double nn = static_cast<double>(n);
  const double mx = sx / nn, my = sy / nn;
  const double cxx = sxx - nn * mx * mx, cxy = sxy - nn * mx * my, cyy = syy - nn * my * my;
  const double slope = cxy / cxx;
  const double intercept = my - slope * mx;
  const double resid = (cyy - slope * cxy) / (nn - 2.0);
  const double se_slope = std::sqrt(resid / cxx);
  const double se_intercept = std::sqrt(resid * (1.0 / nn + mx * mx / cxx));
  const double p_slope = 2.0 * normal_cdf(-std::abs(slope / se_slope));
  const double p_intercept = 2.0 * normal_cdf(-std::abs(intercept / se_intercept));
  EXPECT_GT(p_slope, 0.01) << "slope " << slope << " se " << se_slope;
  EXPECT_GT(p_intercept, 0.01) << "intercept " << intercept << " se " << se_intercept;
  // The overall mean is the ATE.
  const double p_mean = 2.0 * normal_cdf(-std::abs(my / std::sqrt(cyy / nn / nn)));
  EXPECT_GT(p_mean, 0.01);
}

TEST(OracleNuisances, SetupAScoresAreConditionallyUnbiased) {
  double sy = 0, syy = 0, sxy = 0, sx = 0, sxx = 0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < 10; ++c) {
    Scenario sc = Scenario::setup_a(1.0, 10000);
    sc.seed = 77 + c;
    const GeneratedData g = generate(sc);
    const ScoreVector s = aipw_obs_scores(g.data, oracle_nuisances(sc, g.data));
    for (std::size_t i = 0; i < g.data.n; ++i) {
      const double x = g.tau[i];
      const double y = s.values[i] - x;
      sx += x;
      sxx += x * x;
      sy += y;
      syy += y * y;
      sxy += x * y;
      ++n;
    }
  }
  const double nn = static_cast<double>(n);
  const double mx = sx / nn, my = sy / nn;
  const double cxx = sxx - nn * mx * mx, cxy = sxy - nn * mx * my, cyy = syy - nn * my * my;
  const double slope = cxy / cxx;
  const double resid = (cyy - slope * cxy) / (nn - 2.0);
  EXPECT_GT(2.0 * normal_cdf(-std::abs(slope / std::sqrt(resid / cxx))), 0.01);
  EXPECT_GT(2.0 * normal_cdf(-std::abs(my / std::sqrt(cyy / nn / nn))), 0.01);
}

}  // namespace
}  // namespace rate
