#include "rate/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rate/error.hpp"
#include "rate/inference.hpp"

namespace rate {

Scenario Scenario::kink(double p, std::size_t n) {
  Scenario s;
  s.kind = Kind::kKink;
  s.p = p;
  s.n = n;
  return s;
}

Scenario Scenario::setup_a(double sigma_tau, std::size_t n) {
  Scenario s;
  s.kind = Kind::kSetupA;
  s.sigma_tau = sigma_tau;
  s.n = n;
  return s;
}

Scenario Scenario::survival(std::size_t n) {
  Scenario s;
  s.kind = Kind::kSurvival;
  s.d = 5;
  s.n = n;
  return s;
}

std::string Scenario::name() const {
  switch (kind) {
    case Kind::kKink:
      return "kink";
    case Kind::kSetupA:
      return "setup_a";
    case Kind::kSurvival:
      return "survival_second";
  }
  return "unknown";
}

void Scenario::validate() const {
  if (n < 4) throw InvalidArgument(fmt::format("scenario needs n >= 4, got {}", n));
  switch (kind) {
    case Kind::kKink:
      if (!(p > 0.0 && p <= 1.0)) throw InvalidArgument(fmt::format("kink p = {} outside (0,1]", p));
      if (!(noise >= 0.0)) throw InvalidArgument("kink noise must be nonnegative");
      break;
    case Kind::kSetupA:
      if (d < 5) throw InvalidArgument(fmt::format("setup_a needs d >= 5, got {}", d));
      if (!(sigma_tau >= 0.0)) throw InvalidArgument("sigma_tau must be nonnegative");
      if (!(sigma_eps > 0.0)) throw InvalidArgument("sigma_eps must be positive");
      if (k_neighbors < 1) throw InvalidArgument("k_neighbors must be >= 1");
      break;
    case Kind::kSurvival:
      if (d != 5) throw InvalidArgument("survival scenario has exactly 5 features");
      if (!(endpoint.t0 > 0.0)) throw InvalidArgument("endpoint horizon t0 must be positive");
      break;
  }
}

namespace closed_form {

double kink_mu1(double x, double p) { return std::max(-2.0 * x / (p * p) + 2.0 / p, 0.0); }

double setup_a_propensity(double x1, double x2) {
  return std::clamp(std::sin(std::numbers::pi * x1 * x2), 0.1, 0.9);
}

double setup_a_baseline(std::span<const double> x) {
  return std::sin(std::numbers::pi * x[0] * x[1]) + 2.0 * (x[2] - 0.5) * (x[2] - 0.5) + x[3] +
         0.5 * x[4];
}

double setup_a_tau(std::span<const double> x) { return (x[0] + x[1]) / 2.0; }

double survival_propensity(double x2) {
  const double beta = 20.0 * x2 * std::pow(1.0 - x2, 3);  // Beta(2,4) density
  return (1.0 + beta) / 4.0;
}

namespace {

double hazard_scale(double x1, double x2, int w) { return std::exp(x1 + (-0.4 + x2) * w); }

}  // namespace

double survival_event_survival(double t, double x1, double x2, int w) {
  return std::exp(-std::sqrt(t) * hazard_scale(x1, x2, w));
}

double survival_censoring_survival(double s, double x1, double x3, int w) {
  if (s <= 0.0) return 1.0;
  return normal_cdf(x1 - x3 * w - std::log(s));
}

double survival_q(double s, double x1, double x2, int w, const SurvivalEndpoint& endpoint) {
  const double t0 = endpoint.t0;
  if (s >= t0) return endpoint.kind == EndpointKind::kRmst ? t0 : 0.0;
  const double c = hazard_scale(x1, x2, w);
  const double rs = std::sqrt(std::max(s, 0.0));
  const double rt = std::sqrt(t0);
  const double decay = std::exp(-c * (rt - rs));  // S_T(t0) / S_T(s)
  if (endpoint.kind == EndpointKind::kAbsoluteRisk) return 1.0 - decay;
  // s + int_s^t0 S_T(t) dt / S_T(s), with t = v^2.
  const double inv = 1.0 / c;
  return s + 2.0 * ((rs * inv + inv * inv) - decay * (rt * inv + inv * inv));
}

double survival_m(double x1, double x2, int w, const SurvivalEndpoint& endpoint) {
  return survival_q(0.0, x1, x2, w, endpoint);
}

double survival_tau(double x1, double x2, const SurvivalEndpoint& endpoint) {
  return survival_m(x1, x2, 1, endpoint) - survival_m(x1, x2, 0, endpoint);
}

}  // namespace closed_form

}  // namespace rate
