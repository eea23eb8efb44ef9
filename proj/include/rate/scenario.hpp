#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "rate/model.hpp"

namespace rate {

// Simulation designs.
//
//   kink      X ~ U(0,1), W ~ Bern(1/2), mu1(x) = max(-2x/p^2 + 2/p, 0),
//             mu0 = 0, Y = mu_W(X) + eps; priority S(X) = 1 - X
//   setup_a   X ~ U(0,1)^d, e = trim_0.1(sin(pi x1 x2)),
//             b = sin(pi x1 x2) + 2 (x3 - 0.5)^2 + x4 + 0.5 x5,
//             tau~ = tau / SD(tau) * sigma_tau with tau = (x1 + x2) / 2,
//             Y = b + (W - e) tau~ + sigma_eps eps
//   survival  X ~ U(0,1)^5, e = (1 + beta(x2; 2, 4)) / 4,
//             T = (-log U / exp(x1 + (-0.4 + x2) W))^2,
//             C = exp(x1 - x3 W + Z)
struct Scenario {
  enum class Kind { kKink, kSetupA, kSurvival };

  Kind kind = Kind::kKink;
  std::size_t n = 400;
  std::uint64_t seed = 1;

  // kink
  double p = 1.0;
  double noise = 0.2;           // variance of eps, or its SD if noise_is_sd
  bool noise_is_sd = false;

  // setup_a
  std::size_t d = 5;
  double sigma_tau = 1.0;
  double sigma_eps = 1.0;
  std::size_t train_n = 0;      // 0 means n
  std::size_t k_neighbors = 25;
  std::size_t folds = 5;

  // survival
  SurvivalEndpoint endpoint;

  static Scenario kink(double p, std::size_t n);
  static Scenario setup_a(double sigma_tau, std::size_t n);
  static Scenario survival(std::size_t n);

  std::string name() const;
  void validate() const;
};

namespace closed_form {

double kink_mu1(double x, double p);

double setup_a_propensity(double x1, double x2);
double setup_a_baseline(std::span<const double> x);
double setup_a_tau(std::span<const double> x);  // before rescaling

double survival_propensity(double x2);
// S_T(t | x, w) = P(T > t) = exp(-sqrt(t) exp(x1 + (-0.4 + x2) w)).
double survival_event_survival(double t, double x1, double x2, int w);
// S_C(s | x, w) = P(C >= s) = Phi(x1 - x3 w - log s).
double survival_censoring_survival(double s, double x1, double x3, int w);
// q(s | x, w) = E[Y | T >= s] for the endpoint; m(x, w) = q(0 | x, w).
double survival_q(double s, double x1, double x2, int w, const SurvivalEndpoint& endpoint);
double survival_m(double x1, double x2, int w, const SurvivalEndpoint& endpoint);
double survival_tau(double x1, double x2, const SurvivalEndpoint& endpoint);

}  // namespace closed_form

}  // namespace rate
