#include "rate/scores.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rate/error.hpp"

namespace rate {

namespace {

void check_pi(double pi) {
  if (!(pi > 0.0 && pi < 1.0)) {
    throw InvalidArgument(fmt::format("treatment probability pi = {} outside (0,1)", pi));
  }
}

void check_outcome_nuisances(const EvalDataset& d, const NuisanceEvaluations& nuis) {
  if (nuis.m0.size() != d.n || nuis.m1.size() != d.n) {
    throw InvalidArgument(fmt::format("outcome nuisances cover {} / {} units, dataset has {}",
                                      nuis.m0.size(), nuis.m1.size(), d.n));
  }
  for (std::size_t i = 0; i < d.n; ++i) {
    if (!std::isfinite(nuis.m0[i]) || !std::isfinite(nuis.m1[i])) {
      throw InvalidArgument(fmt::format("non-finite outcome nuisance at row {}", i + 1));
    }
  }
}

// Clipped propensities; counts how many were moved.
std::vector<double> clipped_propensities(const EvalDataset& d, const NuisanceEvaluations& nuis,
                                         const ScoreOptions& opts, std::size_t& clipped) {
  if (!nuis.e_hat) throw InvalidArgument("propensity estimates (e_hat) are required");
  if (nuis.e_hat->size() != d.n) {
    throw InvalidArgument(fmt::format("e_hat covers {} units, dataset has {}",
                                      nuis.e_hat->size(), d.n));
  }
  if (!(opts.e_min > 0.0 && opts.e_min < 0.5)) {
    throw InvalidArgument(fmt::format("e_min = {} outside (0, 0.5)", opts.e_min));
  }
  std::vector<double> e(*nuis.e_hat);
  clipped = 0;
  for (std::size_t i = 0; i < d.n; ++i) {
    if (!std::isfinite(e[i]) || e[i] < 0.0 || e[i] > 1.0) {
      throw PositivityError(fmt::format("propensity estimate {} at row {} is not a probability",
                                        e[i], i + 1));
    }
    const double c = std::clamp(e[i], opts.e_min, 1.0 - opts.e_min);
    if (c != e[i]) ++clipped;
    e[i] = c;
  }
  return e;
}

ScoreVector aipw(const EvalDataset& d, std::span<const double> outcome,
                 const NuisanceEvaluations& nuis, std::span<const double> e) {
  ScoreVector s;
  s.values.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const int w = d.treatment[i];
    const double m_w = w == 1 ? nuis.m1[i] : nuis.m0[i];
    s.values[i] = nuis.m1[i] - nuis.m0[i] +
                  (w - e[i]) / (e[i] * (1.0 - e[i])) * (outcome[i] - m_w);
  }
  return s;
}

}  // namespace

ScoreVector ipw_scores(const EvalDataset& d, double pi) {
  check_pi(pi);
  ScoreVector s;
  s.family = ScoreFamily::kIpw;
  s.values.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double y = d.outcome[i];
    s.values[i] = d.treatment[i] == 1 ? y / pi : -y / (1.0 - pi);
  }
  return s;
}

ScoreVector aipw_rct_scores(const EvalDataset& d, double pi, const NuisanceEvaluations& nuis) {
  check_pi(pi);
  check_outcome_nuisances(d, nuis);
  const std::vector<double> e(d.n, pi);
  ScoreVector s = aipw(d, d.outcome, nuis, e);
  s.family = ScoreFamily::kAipwRct;
  return s;
}

ScoreVector aipw_obs_scores(const EvalDataset& d, const NuisanceEvaluations& nuis,
                            const ScoreOptions& opts) {
  check_outcome_nuisances(d, nuis);
  std::size_t clipped = 0;
  const std::vector<double> e = clipped_propensities(d, nuis, opts, clipped);
  ScoreVector s = aipw(d, d.outcome, nuis, e);
  s.family = ScoreFamily::kAipwObs;
  s.clipped_propensities = clipped;
  return s;
}

TransformedOutcome transform_survival_outcome(const EvalDataset& d,
                                              const SurvivalEndpoint& endpoint) {
  if (!d.has_survival()) {
    throw SchemaError("survival scores need 'event_time' and 'event_observed' columns");
  }
  if (!(endpoint.t0 > 0.0) || !std::isfinite(endpoint.t0)) {
    throw InvalidArgument(fmt::format("endpoint horizon t0 = {} must be positive", endpoint.t0));
  }
  const double t0 = endpoint.t0;
  TransformedOutcome out;
  out.u_tilde.resize(d.n);
  out.delta_tilde.resize(d.n);
  out.y.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double u = (*d.event_time)[i];
    const int delta = (*d.event_observed)[i];
    out.u_tilde[i] = std::min(u, t0);
    out.delta_tilde[i] = (delta == 1 || u > t0) ? 1 : 0;
    if (endpoint.kind == EndpointKind::kRmst) {
      out.y[i] = out.u_tilde[i];
    } else {
      out.y[i] = (delta == 1 && u <= t0) ? 1.0 : 0.0;
    }
  }
  return out;
}

ScoreVector aipw_survival_scores(const EvalDataset& d, const SurvivalEndpoint& endpoint,
                                 const NuisanceEvaluations& nuis, const ScoreOptions& opts) {
  const TransformedOutcome t = transform_survival_outcome(d, endpoint);
  check_outcome_nuisances(d, nuis);
  if (nuis.survival.size() != d.n) {
    throw InvalidArgument(fmt::format("survival tables cover {} units, dataset has {}",
                                      nuis.survival.size(), d.n));
  }
  std::size_t clipped = 0;
  const std::vector<double> e = clipped_propensities(d, nuis, opts, clipped);

  ScoreVector s;
  s.family = ScoreFamily::kAipwSurvival;
  s.endpoint = endpoint;
  s.clipped_propensities = clipped;
  s.values.resize(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto& rows = nuis.survival[i];
    const double u = t.u_tilde[i];
    double correction = 0.0;
    const SurvivalRow* at_u = nullptr;
    double prev_s = -INFINITY;
    for (const SurvivalRow& r : rows) {
      if (!(r.s > prev_s)) {
        throw InvalidArgument(
            fmt::format("survival table for unit {} is not strictly increasing in s", i + 1));
      }
      prev_s = r.s;
      if (r.s > u) break;
      if (!(r.sc >= 0.0 && r.sc <= 1.0) || !std::isfinite(r.q) || !std::isfinite(r.dlambda)) {
        throw InvalidArgument(fmt::format("invalid survival table row for unit {} at s = {}",
                                          i + 1, r.s));
      }
      if (r.sc < opts.s_min) {
        throw PositivityError(fmt::format(
            "censoring positivity violated: S_C({}) = {} < {} for unit {}", r.s, r.sc,
            opts.s_min, i + 1));
      }
      correction += r.q / r.sc * r.dlambda;
      at_u = &r;
    }
    if (at_u == nullptr) {
      throw InvalidArgument(
          fmt::format("survival table for unit {} has no grid point at or before {}", i + 1, u));
    }
    const int w = d.treatment[i];
    const double m_w = w == 1 ? nuis.m1[i] : nuis.m0[i];
    const double observed =
        t.delta_tilde[i] == 1 ? t.y[i] / at_u->sc : at_u->q / at_u->sc;
    s.values[i] = nuis.m1[i] - nuis.m0[i] +
                  (w - e[i]) / (e[i] * (1.0 - e[i])) * (observed - correction - m_w);
  }
  return s;
}

}  // namespace rate
