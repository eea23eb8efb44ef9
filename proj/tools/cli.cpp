#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rate/csv.hpp"
#include "rate/error.hpp"
#include "rate/estimator.hpp"
#include "rate/inference.hpp"
#include "rate/json.hpp"
#include "rate/nuisance.hpp"
#include "rate/scores.hpp"
#include "rate/simulate.hpp"
#include "rate/weights.hpp"

namespace rate::cli {

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Options {
  // data and output
  std::string input;
  std::string output;
  std::vector<std::string> priority;
  unsigned threads = 1;
  std::uint64_t seed = 42;

  // weights
  std::vector<std::string> weight;
  double u = kUnset;
  std::string alpha_file;
  bool unit_variance = false;

  // scores
  std::string score;
  double pi = kUnset;
  double t0 = kUnset;
  std::string endpoint = "rmst";
  std::size_t folds = 5;
  std::string learner;
  double lambda = 1.0;
  std::size_t neighbors = 25;
  std::string nuisance_file;
  std::string survival_table;
  double e_min = 0.01;
  double s_min = 0.05;

  // bootstrap
  std::size_t bootstrap = 200;
  double level = 0.95;
  bool bands = false;

  // scenarios
  std::string scenario;
  std::vector<double> p;
  std::vector<std::size_t> n;
  std::vector<double> sigma_tau;
  double sigma_eps = 1.0;
  double noise = 0.2;
  bool noise_sd = false;
  std::size_t dim = 5;
  std::size_t train_n = 0;
  std::string rule;
  std::size_t reps = 1000;
  std::string emit;
};

// ---------------------------------------------------------------------------
// option registration

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--output", o.output, "Write results to this file instead of stdout");
  sub->add_option("--seed", o.seed, "Master random seed");
  sub->add_option("--threads", o.threads, "Worker threads (0 = all cores); results do not depend on it");
}

void add_input(CLI::App* sub, Options& o) {
  sub->add_option("--input", o.input, "Input CSV")->required();
}

void add_scores(CLI::App* sub, Options& o) {
  sub->add_option("--score", o.score, "Score family")
      ->check(CLI::IsMember({"ipw", "aipw-rct", "aipw-obs", "aipw-survival", "supplied"}));
  sub->add_option("--pi", o.pi, "Known treatment probability");
  sub->add_option("--t0", o.t0, "Survival endpoint horizon");
  sub->add_option("--endpoint", o.endpoint, "Survival endpoint")
      ->check(CLI::IsMember({"risk", "rmst"}));
  sub->add_option("--folds", o.folds, "Cross-fitting folds");
  sub->add_option("--learner", o.learner, "Nuisance learner")
      ->check(CLI::IsMember({"ridge", "knn", "oracle"}));
  sub->add_option("--lambda", o.lambda, "Ridge penalty");
  sub->add_option("--neighbors", o.neighbors, "knn neighbour count");
  sub->add_option("--nuisance", o.nuisance_file, "CSV with m0,m1[,ehat] columns");
  sub->add_option("--survival-table", o.survival_table, "CSV with unit,s,q,sc,dlambda rows");
  sub->add_option("--e-min", o.e_min, "Propensity clipping bound");
  sub->add_option("--s-min", o.s_min, "Censoring survival floor");
}

void add_weights(CLI::App* sub, Options& o, bool many) {
  auto* w = sub->add_option("--weight", o.weight, "RATE weight")
                ->check(CLI::IsMember({"autoc", "qini", "toc", "custom"}));
  if (!many) w->expected(1);
  sub->add_option("--u", o.u, "Fraction treated for --weight toc");
  sub->add_option("--alpha-file", o.alpha_file, "Single-column CSV of alpha(j/n)");
  sub->add_flag("--unit-variance", o.unit_variance, "Rescale weights to unit variance");
}

void add_bootstrap(CLI::App* sub, Options& o) {
  sub->add_option("--bootstrap", o.bootstrap, "Half-sample bootstrap replicates");
  sub->add_option("--level", o.level, "Confidence level");
}

void add_scenario(CLI::App* sub, Options& o, bool required) {
  auto* s = sub->add_option("--scenario", o.scenario, "Simulation scenario")
                ->check(CLI::IsMember({"kink", "setup-a", "survival"}));
  if (required) s->required();
  sub->add_option("--p", o.p, "kink: fraction with nonzero effect");
  sub->add_option("--sigma-tau", o.sigma_tau, "setup-a: effect heterogeneity scale");
  sub->add_option("--sigma-eps", o.sigma_eps, "setup-a: noise SD");
  sub->add_option("--noise", o.noise, "kink: noise variance (SD with --noise-sd)");
  sub->add_flag("--noise-sd", o.noise_sd, "kink: read --noise as a standard deviation");
  sub->add_option("--dim", o.dim, "setup-a: feature dimension");
}

// ---------------------------------------------------------------------------
// helpers

void write_text(const Options& o, std::ostream& out, const std::string& text) {
  if (o.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.output, std::ios::binary);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", o.output));
  f << text;
  if (!f) throw std::runtime_error(fmt::format("failed writing '{}'", o.output));
}

EvalDataset load(const Options& o) { return validate_dataset(read_csv(o.input)); }

SurvivalEndpoint endpoint_of(const Options& o) {
  SurvivalEndpoint ep;
  ep.kind = o.endpoint == "risk" ? EndpointKind::kAbsoluteRisk : EndpointKind::kRmst;
  if (!std::isnan(o.t0)) ep.t0 = o.t0;
  return ep;
}

Scenario scenario_of(const Options& o, std::size_t n) {
  Scenario s;
  if (o.scenario == "kink") {
    s = Scenario::kink(o.p.empty() ? 1.0 : o.p.front(), n);
    s.noise = o.noise;
    s.noise_is_sd = o.noise_sd;
  } else if (o.scenario == "setup-a") {
    s = Scenario::setup_a(o.sigma_tau.empty() ? 1.0 : o.sigma_tau.front(), n);
    s.d = o.dim;
    s.sigma_eps = o.sigma_eps;
    s.k_neighbors = o.neighbors;
    s.folds = o.folds;
    s.train_n = o.train_n;
  } else if (o.scenario == "survival") {
    s = Scenario::survival(n);
    s.endpoint = endpoint_of(o);
  } else {
    throw InvalidArgument("--scenario is required");
  }
  return s;
}

WeightSpec weight_of(const Options& o, const std::string& name, std::size_t n) {
  WeightSpec spec;
  if (name == "autoc") {
    spec = WeightSpec::autoc();
  } else if (name == "qini") {
    spec = WeightSpec::qini();
  } else if (name == "toc") {
    if (std::isnan(o.u)) throw InvalidArgument("--weight toc requires --u");
    spec = WeightSpec::high_vs_others(o.u);
  } else {
    if (o.alpha_file.empty()) throw InvalidArgument("--weight custom requires --alpha-file");
    const RawColumns cols = read_csv(o.alpha_file);
    if (cols.size() != 1) {
      throw SchemaError(
          fmt::format("alpha file must have exactly one column, found {}", cols.size()));
    }
    if (cols.front().values.size() != n) {
      throw InvalidArgument(fmt::format("alpha file has {} entries but the dataset has n = {}",
                                        cols.front().values.size(), n));
    }
    spec = WeightSpec::custom(cols.front().values);
  }
  return o.unit_variance ? spec.rescaled() : spec;
}

WeightSpec single_weight(const Options& o, std::size_t n) {
  return weight_of(o, o.weight.empty() ? "autoc" : o.weight.front(), n);
}

BootstrapConfig bootstrap_of(const Options& o) {
  BootstrapConfig cfg;
  cfg.replicates = o.bootstrap;
  cfg.seed = o.seed;
  cfg.level = o.level;
  cfg.threads = o.threads;
  return cfg;
}

const Column& require_column(const RawColumns& cols, const std::string& name,
                             const std::string& file) {
  for (const Column& c : cols) {
    if (c.name == name) return c;
  }
  throw SchemaError(fmt::format("'{}' has no '{}' column", file, name));
}

// Outcome and propensity nuisances from --nuisance.
NuisanceEvaluations read_nuisances(const std::string& path, std::size_t n) {
  const RawColumns cols = read_csv(path);
  NuisanceEvaluations nuis;
  nuis.m0 = require_column(cols, "m0", path).values;
  nuis.m1 = require_column(cols, "m1", path).values;
  for (const Column& c : cols) {
    if (c.name == "ehat") nuis.e_hat = c.values;
  }
  if (nuis.m0.size() != n) {
    throw SchemaError(fmt::format("column length mismatch: '{}' has {} rows, dataset has {}",
                                  path, nuis.m0.size(), n));
  }
  return nuis;
}

std::vector<std::vector<SurvivalRow>> read_survival_table(const std::string& path,
                                                          std::size_t n) {
  const RawColumns cols = read_csv(path);
  const auto& unit = require_column(cols, "unit", path).values;
  const auto& s = require_column(cols, "s", path).values;
  const auto& q = require_column(cols, "q", path).values;
  const auto& sc = require_column(cols, "sc", path).values;
  const auto& dl = require_column(cols, "dlambda", path).values;
  std::vector<std::vector<SurvivalRow>> tables(n);
  for (std::size_t r = 0; r < unit.size(); ++r) {
    const double id = unit[r];
    if (!(id >= 1.0 && id <= static_cast<double>(n) && id == std::floor(id))) {
      throw SchemaError(fmt::format("survival table row {}: unit {} is not in 1..{}", r + 1, id, n));
    }
    tables[static_cast<std::size_t>(id) - 1].push_back({s[r], q[r], sc[r], dl[r]});
  }
  return tables;
}

struct ScoreResult {
  ScoreVector scores;
  std::string learner = "none";
};

LearnerSpec learner_of(const Options& o, const std::string& name) {
  if (name == "ridge") return LearnerSpec::ridge(o.lambda);
  if (name == "knn") return LearnerSpec::knn(o.neighbors);
  LearnerSpec s;
  s.kind = LearnerSpec::Kind::kOracle;
  return s;
}

ScoreResult build_scores(const Options& o, const EvalDataset& d) {
  std::string family = o.score;
  if (family.empty()) {
    if (!d.gamma) throw SchemaError("no scores: pass --score or provide a 'gamma' column");
    family = "supplied";
  }
  ScoreResult result;
  if (family == "supplied") {
    if (!d.gamma) throw SchemaError("--score supplied needs a 'gamma' column");
    result.scores = supplied_scores(*d.gamma);
    return result;
  }
  if (d.has_survival() && std::isnan(o.t0)) {
    throw InvalidArgument("endpoint horizon required: censored data needs --t0");
  }
  if (d.has_survival() && family != "aipw-survival") {
    throw InvalidArgument(
        fmt::format("score '{}' ignores censoring; use --score aipw-survival", family));
  }
  if (!d.has_survival() && family == "aipw-survival") {
    throw SchemaError("aipw-survival needs 'event_time' and 'event_observed' columns");
  }
  if (family == "ipw") {
    if (std::isnan(o.pi)) throw InvalidArgument("--score ipw requires --pi");
    result.scores = ipw_scores(d, o.pi);
    return result;
  }

  const bool survival = family == "aipw-survival";
  const bool needs_e = family != "aipw-rct";
  if (!o.nuisance_file.empty() && !o.learner.empty()) {
    throw InvalidArgument("pass either --nuisance or --learner, not both");
  }
  if (survival && (o.nuisance_file.empty() != o.survival_table.empty())) {
    throw InvalidArgument("--nuisance and --survival-table must be given together");
  }

  NuisanceEvaluations nuis;
  std::optional<FoldAssignment> folds;
  if (!o.nuisance_file.empty()) {
    nuis = read_nuisances(o.nuisance_file, d.n);
    if (survival) nuis.survival = read_survival_table(o.survival_table, d.n);
    result.learner = "file";
  } else {
    const std::string name = o.learner.empty() ? (survival ? "knn" : "ridge") : o.learner;
    result.learner = name;
    if (name == "oracle") {
      nuis = oracle_nuisances(scenario_of(o, d.n), d);
    } else {
      CrossFitOptions cf_opts;
      cf_opts.fit_propensity = needs_e && !d.propensity;
      if (survival) cf_opts.survival = endpoint_of(o);
      cf_opts.threads = o.threads;
      CrossFitResult cf = cross_fit(d, o.folds, learner_of(o, name), o.seed, cf_opts);
      nuis = std::move(cf.nuisances);
      folds = std::move(cf.folds);
    }
  }
  if (needs_e && d.propensity) nuis.e_hat = *d.propensity;

  ScoreOptions so;
  so.e_min = o.e_min;
  so.s_min = o.s_min;
  if (family == "aipw-rct") {
    if (std::isnan(o.pi)) throw InvalidArgument("--score aipw-rct requires --pi");
    result.scores = aipw_rct_scores(d, o.pi, nuis);
  } else if (family == "aipw-obs") {
    result.scores = aipw_obs_scores(d, nuis, so);
  } else {
    result.scores = aipw_survival_scores(d, endpoint_of(o), nuis, so);
  }
  result.scores.folds = std::move(folds);
  return result;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_scores(const Options& o, std::ostream& out) {
  EvalDataset d = load(o);
  const ScoreResult r = build_scores(o, d);
  d.gamma = r.scores.values;
  write_text(o, out, format_csv(to_raw_columns(d)));
  if (!o.output.empty()) {
    nlohmann::json side = {
        {"family", to_string(r.scores.family)},
        {"n", d.n},
        {"seed", o.seed},
        {"learner", r.learner},
        {"clipped_propensities", r.scores.clipped_propensities},
        {"folds", r.scores.folds ? nlohmann::json(r.scores.folds->k) : nlohmann::json(nullptr)},
    };
    if (r.scores.endpoint) {
      side["endpoint"] = {
          {"kind", r.scores.endpoint->kind == EndpointKind::kRmst ? "rmst" : "risk"},
          {"t0", r.scores.endpoint->t0},
      };
    }
    std::ofstream f(o.output + ".json", std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}.json'", o.output));
    f << canonical_json(side) << '\n';
  }
  return 0;
}

const std::string& single_priority(const Options& o) {
  if (o.priority.size() != 1) {
    throw InvalidArgument(fmt::format("expected one --priority, got {}", o.priority.size()));
  }
  return o.priority.front();
}

int cmd_estimate(const Options& o, std::ostream& out) {
  const EvalDataset d = load(o);
  const PriorityRanking ranking = rank_by_priority(d, single_priority(o));
  const ScoreVector scores = build_scores(o, d).scores;
  const WeightSpec spec = single_weight(o, d.n);
  const RateEstimate est = half_sample_bootstrap(scores, ranking, spec, bootstrap_of(o));
  write_text(o, out, canonical_json(to_json(est)) + "\n");
  return 0;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.priority.size() != 2) {
    throw InvalidArgument(
        fmt::format("compare needs exactly two --priority columns, got {}", o.priority.size()));
  }
  const EvalDataset d = load(o);
  const PriorityRanking a = rank_by_priority(d, o.priority[0]);
  const PriorityRanking b = rank_by_priority(d, o.priority[1]);
  const ScoreVector scores = build_scores(o, d).scores;
  const WeightSpec spec = single_weight(o, d.n);
  const RateEstimate est = paired_bootstrap_difference(scores, a, b, spec, bootstrap_of(o));
  write_text(o, out, canonical_json(to_json(est)) + "\n");
  return 0;
}

int cmd_toc(const Options& o, std::ostream& out) {
  const EvalDataset d = load(o);
  const PriorityRanking ranking = rank_by_priority(d, single_priority(o));
  const ScoreVector scores = build_scores(o, d).scores;
  RawColumns cols;
  if (o.bands) {
    const TocCurve c = toc_band(scores, ranking, bootstrap_of(o));
    cols = {{"u", c.u}, {"toc", c.values}, {"ci_low", c.ci_low}, {"ci_high", c.ci_high}};
  } else {
    const TocCurve c = toc_curve(scores, ranking);
    cols = {{"u", c.u}, {"toc", c.values}};
  }
  write_text(o, out, format_csv(cols));
  return 0;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const bool kink = o.scenario == "kink";
  const bool setup_a = o.scenario == "setup-a";
  std::vector<std::size_t> sizes = o.n;
  if (sizes.empty()) sizes = {kink ? 400u : setup_a ? 1000u : 500u};
  std::vector<double> ps = o.p.empty() ? std::vector<double>{1.0} : o.p;
  std::vector<double> taus = o.sigma_tau.empty() ? std::vector<double>{1.0} : o.sigma_tau;
  const std::string rule = !o.rule.empty() ? o.rule : kink ? "s" : setup_a ? "plugin" : "oracle";

  std::vector<PowerCell> cells;
  for (std::size_t n : sizes) {
    Options local = o;
    if (kink) {
      for (double p : ps) {
        local.p = {p};
        cells.push_back({scenario_of(local, n), rule});
      }
    } else if (setup_a) {
      for (double t : taus) {
        local.sigma_tau = {t};
        cells.push_back({scenario_of(local, n), rule});
      }
    } else {
      cells.push_back({scenario_of(local, n), rule});
    }
  }

  if (!o.emit.empty()) {
    Scenario sc = cells.front().scenario;
    sc.seed = o.seed;
    const GeneratedData g = generate(sc);
    std::ofstream f(o.emit, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", o.emit));
    f << format_csv(to_raw_columns(g.data));
    return 0;
  }

  std::vector<WeightSpec> specs;
  if (o.weight.empty()) {
    specs = {WeightSpec::autoc(), kink ? WeightSpec::qini().rescaled() : WeightSpec::qini()};
  } else {
    for (const std::string& w : o.weight) {
      if (w == "custom") throw InvalidArgument("simulate does not take custom weights");
      specs.push_back(weight_of(o, w, 0));
    }
  }
  PowerConfig cfg;
  cfg.reps = o.reps;
  cfg.bootstrap = o.bootstrap;
  cfg.seed = o.seed;
  cfg.alpha = 1.0 - o.level;
  cfg.threads = o.threads;
  write_text(o, out, power_study(cells, specs, cfg).to_csv());
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kSchema:
    case ErrorKind::kInvalidArgument:
      return 2;
    case ErrorKind::kPositivity:
      return 3;
  }
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Rank-weighted average treatment effect (RATE) evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rate 0.1.0");

  auto* scores = app.add_subcommand("scores", "Append doubly robust scores as a 'gamma' column");
  add_input(scores, o);
  add_common(scores, o);
  add_scores(scores, o);
  add_scenario(scores, o, false);

  auto* estimate = app.add_subcommand("estimate", "Estimate a RATE with bootstrap inference");
  auto* toc = app.add_subcommand("toc", "Export the TOC curve");
  auto* compare = app.add_subcommand("compare", "Paired RATE difference of two rules");
  for (auto* sub : {estimate, toc, compare}) {
    add_input(sub, o);
    add_common(sub, o);
    add_scores(sub, o);
    add_scenario(sub, o, false);
    add_bootstrap(sub, o);
    sub->add_option("--priority", o.priority, "Priority column name(s)")->required();
  }
  add_weights(estimate, o, false);
  add_weights(compare, o, false);
  toc->add_flag("--bands", o.bands, "Add pointwise bootstrap bands on u = 0.05..1");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo power study");
  add_common(simulate, o);
  add_scenario(simulate, o, true);
  add_bootstrap(simulate, o);
  add_weights(simulate, o, true);
  simulate->add_option("--n", o.n, "Sample size(s)");
  simulate->add_option("--reps", o.reps, "Monte Carlo repetitions per cell");
  simulate->add_option("--rule", o.rule, "Priority rule column");
  simulate->add_option("--t0", o.t0, "survival: endpoint horizon");
  simulate->add_option("--endpoint", o.endpoint, "survival: endpoint")
      ->check(CLI::IsMember({"risk", "rmst"}));
  simulate->add_option("--folds", o.folds, "setup-a: cross-fitting folds");
  simulate->add_option("--neighbors", o.neighbors, "setup-a: knn neighbour count");
  simulate->add_option("--train-n", o.train_n, "setup-a: plug-in training sample size");
  simulate->add_option("--emit", o.emit, "Write one generated dataset to this CSV and exit");

  std::vector<const char*> argv;
  argv.push_back("rate");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*scores) return cmd_scores(o, out);
    if (*estimate) return cmd_estimate(o, out);
    if (*toc) return cmd_toc(o, out);
    if (*compare) return cmd_compare(o, out);
    if (*simulate) return cmd_simulate(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace rate::cli
