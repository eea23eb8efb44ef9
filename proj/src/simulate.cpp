#include "rate/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rate/csv.hpp"
#include "rate/error.hpp"
#include "rate/inference.hpp"
#include "rate/nuisance.hpp"
#include "rate/parallel.hpp"
#include "rate/random.hpp"
#include "rate/scores.hpp"

namespace rate {

namespace {

double sample_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

FeatureMatrix uniform_features(Rng& rng, std::size_t n, std::size_t d) {
  FeatureMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) x.at(i, c) = rng.uniform();
  }
  return x;
}

std::vector<double> uniform_column(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

// Setup A draw without rules; tau is already rescaled.
GeneratedData setup_a_draw(const Scenario& sc, std::size_t n, Rng& rng) {
  GeneratedData g;
  EvalDataset& d = g.data;
  d.n = n;
  d.features = uniform_features(rng, n, sc.d);
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) tau[i] = closed_form::setup_a_tau(d.features.row(i));
  const double sd = sample_sd(tau);
  const double scale = sd > 0.0 ? sc.sigma_tau / sd : 0.0;
  d.treatment.resize(n);
  d.outcome.resize(n);
  g.tau.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = d.features.row(i);
    const double e = closed_form::setup_a_propensity(row[0], row[1]);
    const int w = rng.bernoulli(e) ? 1 : 0;
    g.tau[i] = tau[i] * scale;
    d.treatment[i] = w;
    d.outcome[i] = closed_form::setup_a_baseline(row) + (w - e) * g.tau[i] +
                   sc.sigma_eps * rng.normal();
  }
  d.priorities["oracle"] = tau;
  return g;
}

GeneratedData generate_kink(const Scenario& sc) {
  Rng rng(derive_seed(sc.seed, {static_cast<std::uint64_t>(Stream::kGenerate)}));
  const double sd = sc.noise_is_sd ? sc.noise : std::sqrt(sc.noise);
  GeneratedData g;
  EvalDataset& d = g.data;
  const std::size_t n = sc.n;
  d.n = n;
  d.features = FeatureMatrix(n, 1);
  d.treatment.resize(n);
  d.outcome.resize(n);
  g.tau.resize(n);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    const int w = rng.bernoulli(0.5) ? 1 : 0;
    const double mu1 = closed_form::kink_mu1(x, sc.p);
    d.features.at(i, 0) = x;
    d.treatment[i] = w;
    d.outcome[i] = (w == 1 ? mu1 : 0.0) + sd * rng.normal();
    g.tau[i] = mu1;
    s[i] = 1.0 - x;
  }
  d.propensity = std::vector<double>(n, 0.5);
  d.priorities["s"] = std::move(s);
  d.priorities["random"] = uniform_column(rng, n);
  return g;
}

GeneratedData generate_setup_a(const Scenario& sc) {
  Rng rng(derive_seed(sc.seed, {static_cast<std::uint64_t>(Stream::kGenerate)}));
  GeneratedData g = setup_a_draw(sc, sc.n, rng);
  g.data.priorities["random"] = uniform_column(rng, sc.n);

  Rng train_rng(derive_seed(sc.seed, {static_cast<std::uint64_t>(Stream::kTrainingSplit)}));
  const GeneratedData train = setup_a_draw(sc, sc.train_n > 0 ? sc.train_n : sc.n, train_rng);
  const EvalDataset& t = train.data;
  std::vector<std::size_t> arms[2];
  for (std::size_t i = 0; i < t.n; ++i) arms[t.treatment[i]].push_back(i);
  if (arms[0].empty() || arms[1].empty()) {
    throw InvalidArgument("setup_a training draw has an empty treatment arm");
  }
  const LearnerSpec knn = LearnerSpec::knn(sc.k_neighbors);
  const auto m0 = Regressor::fit(knn, t.features, t.outcome, arms[0]).predict(g.data.features);
  const auto m1 = Regressor::fit(knn, t.features, t.outcome, arms[1]).predict(g.data.features);
  std::vector<double> plugin(sc.n);
  for (std::size_t i = 0; i < sc.n; ++i) plugin[i] = m1[i] - m0[i];
  g.data.priorities["plugin"] = std::move(plugin);
  g.data.priorities["risk"] = m0;
  return g;
}

GeneratedData generate_survival(const Scenario& sc) {
  Rng rng(derive_seed(sc.seed, {static_cast<std::uint64_t>(Stream::kGenerate)}));
  GeneratedData g;
  EvalDataset& d = g.data;
  const std::size_t n = sc.n;
  d.n = n;
  d.features = uniform_features(rng, n, 5);
  d.treatment.resize(n);
  std::vector<double> u(n);
  std::vector<int> delta(n);
  g.tau.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = d.features.row(i);
    const int w = rng.bernoulli(closed_form::survival_propensity(x[1])) ? 1 : 0;
    const double unif = rng.uniform_open();
    const double z = rng.normal();
    const double t = std::pow(-std::log(unif) / std::exp(x[0] + (-0.4 + x[1]) * w), 2.0);
    const double c = std::exp(x[0] - x[2] * w + z);
    d.treatment[i] = w;
    u[i] = std::min(t, c);
    delta[i] = t <= c ? 1 : 0;
    g.tau[i] = closed_form::survival_tau(x[0], x[1], sc.endpoint);
  }
  d.outcome = u;
  d.event_time = std::move(u);
  d.event_observed = std::move(delta);
  d.priorities["oracle"] = g.tau;
  d.priorities["random"] = uniform_column(rng, n);
  return g;
}

// Draws of (tau, priority) for the population oracle.
struct PopulationDraws {
  std::vector<double> tau;
  std::vector<double> priority;
};

PopulationDraws population_draws(const Scenario& sc, const std::string& rule, std::size_t draws,
                                 Rng& rng) {
  PopulationDraws p;
  p.tau.resize(draws);
  p.priority.resize(draws);
  const bool random = rule == "random";
  const std::size_t d = sc.kind == Scenario::Kind::kSetupA ? sc.d : 5;
  std::vector<double> x(d);
  for (std::size_t i = 0; i < draws; ++i) {
    for (double& v : x) v = rng.uniform();
    p.tau[i] = sc.kind == Scenario::Kind::kSetupA
                   ? closed_form::setup_a_tau(x)
                   : closed_form::survival_tau(x[0], x[1], sc.endpoint);
    p.priority[i] = random ? rng.uniform() : p.tau[i];
  }
  if (sc.kind == Scenario::Kind::kSetupA) {
    const double sd = sample_sd(p.tau);
    const double scale = sd > 0.0 ? sc.sigma_tau / sd : 0.0;
    for (double& t : p.tau) t *= scale;
  }
  return p;
}

TrueRate summarize_products(const std::vector<double>& products) {
  const double n = static_cast<double>(products.size());
  TrueRate r;
  r.value = std::accumulate(products.begin(), products.end(), 0.0) / n;
  r.mc_se = sample_sd(products) / std::sqrt(n);
  return r;
}

}  // namespace

GeneratedData generate(const Scenario& scenario) {
  scenario.validate();
  switch (scenario.kind) {
    case Scenario::Kind::kKink:
      return generate_kink(scenario);
    case Scenario::Kind::kSetupA:
      return generate_setup_a(scenario);
    case Scenario::Kind::kSurvival:
      return generate_survival(scenario);
  }
  throw InvalidArgument("unknown scenario");
}

ScoreVector simulation_scores(const Scenario& scenario, const GeneratedData& g,
                              std::uint64_t seed) {
  switch (scenario.kind) {
    case Scenario::Kind::kKink:
      return ipw_scores(g.data, 0.5);
    case Scenario::Kind::kSetupA: {
      const CrossFitResult cf =
          cross_fit(g.data, scenario.folds, LearnerSpec::knn(scenario.k_neighbors), seed);
      ScoreVector s = aipw_obs_scores(g.data, cf.nuisances);
      s.folds = cf.folds;
      return s;
    }
    case Scenario::Kind::kSurvival:
      return aipw_survival_scores(g.data, scenario.endpoint, oracle_nuisances(scenario, g.data));
  }
  throw InvalidArgument("unknown scenario");
}

TrueRate true_rate(const Scenario& scenario, const std::string& rule, const WeightSpec& spec,
                   std::size_t draws, std::uint64_t seed) {
  scenario.validate();
  if (draws < 2) throw InvalidArgument("true_rate needs at least 2 draws");
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::kTruth)}));
  std::vector<double> products(draws);

  if (scenario.kind == Scenario::Kind::kKink) {
    if (rule != "s" && rule != "random") {
      throw InvalidArgument(fmt::format("kink has no closed-form rule '{}'", rule));
    }
    for (std::size_t i = 0; i < draws; ++i) {
      const double x = rng.uniform_open();
      const double t = rule == "s" ? x : rng.uniform_open();
      products[i] = population_weight(spec, t) * closed_form::kink_mu1(x, scenario.p);
    }
    return summarize_products(products);
  }

  if (rule != "oracle" && rule != "random") {
    throw InvalidArgument(fmt::format("{} has no closed-form rule '{}'", scenario.name(), rule));
  }
  const PopulationDraws p = population_draws(scenario, rule, draws, rng);
  const PriorityRanking ranking = rank_values(p.priority);
  const double n = static_cast<double>(draws);
  for (std::size_t j = 0; j < draws; ++j) {
    const double t = (static_cast<double>(j) + 0.5) / n;
    products[j] = population_weight(spec, t) * p.tau[ranking.order[j]];
  }
  return summarize_products(products);
}

std::string cell_param(const PowerCell& cell) {
  const Scenario& s = cell.scenario;
  switch (s.kind) {
    case Scenario::Kind::kKink:
      return fmt::format("p={};n={};rule={}", format_double(s.p), s.n, cell.rule);
    case Scenario::Kind::kSetupA:
      return fmt::format("sigma_tau={};n={};rule={}", format_double(s.sigma_tau), s.n, cell.rule);
    case Scenario::Kind::kSurvival:
      return fmt::format("n={};endpoint={};t0={};rule={}", s.n,
                         s.endpoint.kind == EndpointKind::kRmst ? "rmst" : "risk",
                         format_double(s.endpoint.t0), cell.rule);
  }
  return {};
}

PowerReport power_study(const std::vector<PowerCell>& cells, const std::vector<WeightSpec>& specs,
                        const PowerConfig& cfg) {
  if (cfg.reps < 1) throw InvalidArgument("power study needs reps >= 1");
  if (specs.empty()) throw InvalidArgument("power study needs at least one weight");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw InvalidArgument(fmt::format("significance level {} outside (0,1)", cfg.alpha));
  }
  PowerReport report;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const PowerCell& cell = cells[c];
    cell.scenario.validate();
    // results[r * S + s]
    std::vector<RateEstimate> results(cfg.reps * specs.size());
    parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
      Scenario sc = cell.scenario;
      sc.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::kGenerate), c, r});
      const GeneratedData g = generate(sc);
      const ScoreVector scores = simulation_scores(
          sc, g, derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::kFolds), c, r}));
      const PriorityRanking ranking = rank_by_priority(g.data, cell.rule);
      BootstrapConfig bc;
      bc.replicates = cfg.bootstrap;
      bc.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::kBootstrap), c, r});
      bc.threads = 1;
      for (std::size_t s = 0; s < specs.size(); ++s) {
        results[r * specs.size() + s] = half_sample_bootstrap(scores, ranking, specs[s], bc);
      }
    });
    for (std::size_t s = 0; s < specs.size(); ++s) {
      PowerRow row;
      row.scenario = cell.scenario.name();
      row.param = cell_param(cell);
      row.weight = specs[s].id();
      row.reps = cfg.reps;
      std::size_t rejections = 0;
      double sum_est = 0.0;
      double sum_se = 0.0;
      for (std::size_t r = 0; r < cfg.reps; ++r) {
        const RateEstimate& e = results[r * specs.size() + s];
        if (e.p_value < cfg.alpha) ++rejections;
        sum_est += e.point;
        sum_se += e.std_error;
      }
      const double reps = static_cast<double>(cfg.reps);
      row.power = static_cast<double>(rejections) / reps;
      row.mean_estimate = sum_est / reps;
      row.mean_se = sum_se / reps;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string PowerReport::to_csv() const {
  std::string out = "scenario,param,weight,reps,power,mean_estimate,mean_se\n";
  for (const PowerRow& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.scenario, r.param, r.weight, r.reps,
                       format_double(r.power), format_double(r.mean_estimate),
                       format_double(r.mean_se));
  }
  return out;
}

}  // namespace rate
