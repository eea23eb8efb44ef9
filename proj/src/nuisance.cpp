#include "rate/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "rate/error.hpp"
#include "rate/parallel.hpp"
#include "rate/random.hpp"

namespace rate {

namespace {

constexpr double kProbabilityEps = 1e-6;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

// Indices into `candidates` of the k rows nearest to `query`, nearest first;
// equal distances go to the lower row index.
std::vector<std::size_t> nearest(const FeatureMatrix& x, std::span<const double> query,
                                 std::span<const std::size_t> candidates, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    dist[j] = {squared_distance(x.row(candidates[j]), query), candidates[j]};
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = dist[j].second;
  return out;
}

// Right-continuous product-limit curve for one event type.
class ProductLimit {
 public:
  // obs holds (time, 1 if the tracked event occurred at that time).
  explicit ProductLimit(std::vector<std::pair<double, int>> obs) {
    std::sort(obs.begin(), obs.end());
    const std::size_t n = obs.size();
    double surv = 1.0;
    double area = 0.0;
    double last_t = 0.0;
    std::size_t i = 0;
    while (i < n) {
      const double t = obs[i].first;
      std::size_t events = 0;
      std::size_t j = i;
      for (; j < n && obs[j].first == t; ++j) events += obs[j].second;
      if (events > 0) {
        area += surv * (t - last_t);
        last_t = t;
        surv *= 1.0 - static_cast<double>(events) / static_cast<double>(n - i);
        times_.push_back(t);
        surv_.push_back(surv);
        area_.push_back(area);
      }
      i = j;
    }
  }

  // S(t) = prod over jumps <= t.
  double at(double t) const {
    const auto j = std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
    return j == 0 ? 1.0 : surv_[static_cast<std::size_t>(j - 1)];
  }

  // S(t-) = prod over jumps < t.
  double before(double t) const {
    const auto j = std::lower_bound(times_.begin(), times_.end(), t) - times_.begin();
    return j == 0 ? 1.0 : surv_[static_cast<std::size_t>(j - 1)];
  }

  // Integral of S over [0, t].
  double integral_to(double t) const {
    const auto j = std::upper_bound(times_.begin(), times_.end(), t) - times_.begin();
    if (j == 0) return t;
    const auto k = static_cast<std::size_t>(j - 1);
    return area_[k] + surv_[k] * (t - times_[k]);
  }

 private:
  std::vector<double> times_;
  std::vector<double> surv_;
  std::vector<double> area_;  // integral of S over [0, times_[j]]
};

// E[Y | T >= s] under the product-limit curve.
double km_q(const ProductLimit& t_curve, double s, const SurvivalEndpoint& ep) {
  const double t0 = ep.t0;
  if (s >= t0) return ep.kind == EndpointKind::kRmst ? t0 : 0.0;
  const double base = t_curve.before(s);
  if (ep.kind == EndpointKind::kRmst) {
    if (base <= 0.0) return s;
    return s + (t_curve.integral_to(t0) - t_curve.integral_to(s)) / base;
  }
  if (base <= 0.0) return 1.0;
  return 1.0 - t_curve.at(t0) / base;
}

void check_subset(std::span<const std::size_t> subset, std::size_t rows) {
  if (subset.empty()) throw InvalidArgument("learner training subset is empty");
  for (std::size_t i : subset) {
    if (i >= rows) throw InvalidArgument(fmt::format("training row {} out of range", i));
  }
}

std::vector<std::size_t> arm_subset(const EvalDataset& d, std::span<const std::size_t> subset,
                                    int arm) {
  std::vector<std::size_t> out;
  for (std::size_t i : subset) {
    if (d.treatment[i] == arm) out.push_back(i);
  }
  return out;
}

}  // namespace

LearnerSpec LearnerSpec::ridge(double lambda) {
  LearnerSpec s;
  s.kind = Kind::kRidge;
  s.lambda = lambda;
  return s;
}

LearnerSpec LearnerSpec::knn(std::size_t k_neighbors) {
  LearnerSpec s;
  s.kind = Kind::kKnn;
  s.k_neighbors = k_neighbors;
  return s;
}

void LearnerSpec::validate() const {
  if (kind == Kind::kRidge && !(lambda > 0.0 && std::isfinite(lambda))) {
    throw InvalidArgument(fmt::format("ridge penalty lambda = {} must be positive", lambda));
  }
  if (kind == Kind::kKnn && k_neighbors < 1) {
    throw InvalidArgument("knn needs k_neighbors >= 1");
  }
}

Regressor Regressor::fit(const LearnerSpec& spec, const FeatureMatrix& x,
                         std::span<const double> targets, std::span<const std::size_t> subset) {
  spec.validate();
  if (spec.kind == LearnerSpec::Kind::kOracle) {
    throw InvalidArgument("the oracle learner has no fit step; use oracle_nuisances");
  }
  if (targets.size() != x.rows()) {
    throw InvalidArgument(fmt::format("{} targets for {} feature rows", targets.size(), x.rows()));
  }
  check_subset(subset, x.rows());
  for (std::size_t i : subset) {
    if (!std::isfinite(targets[i])) {
      throw InvalidArgument(fmt::format("non-finite learner target at row {}", i + 1));
    }
  }

  Regressor r;
  r.spec_ = spec;
  r.dim_ = x.cols();
  const std::size_t m = subset.size();
  const std::size_t p = x.cols();

  if (spec.kind == LearnerSpec::Kind::kKnn) {
    r.train_x_ = FeatureMatrix(m, p);
    r.train_y_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t c = 0; c < p; ++c) r.train_x_.at(j, c) = x.at(subset[j], c);
      r.train_y_[j] = targets[subset[j]];
    }
    return r;
  }

  double y_mean = 0.0;
  for (std::size_t i : subset) y_mean += targets[i];
  y_mean /= static_cast<double>(m);

  r.mean_.assign(p, 0.0);
  r.scale_.assign(p, 1.0);
  for (std::size_t c = 0; c < p; ++c) {
    double mu = 0.0;
    for (std::size_t i : subset) mu += x.at(i, c);
    mu /= static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i : subset) ss += (x.at(i, c) - mu) * (x.at(i, c) - mu);
    const double sd = std::sqrt(ss / static_cast<double>(m));
    r.mean_[c] = mu;
    r.scale_[c] = sd > 0.0 ? sd : 1.0;
  }

  Eigen::MatrixXd z(m, p);
  Eigen::VectorXd yc(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = subset[j];
    for (std::size_t c = 0; c < p; ++c) z(j, c) = (x.at(i, c) - r.mean_[c]) / r.scale_[c];
    yc(j) = targets[i] - y_mean;
  }
  Eigen::MatrixXd gram = z.transpose() * z;
  gram.diagonal().array() += spec.lambda;
  const Eigen::VectorXd beta = gram.ldlt().solve(z.transpose() * yc);
  r.beta_.assign(beta.data(), beta.data() + p);
  r.intercept_ = y_mean;
  return r;
}

Regressor Regressor::fit_probability(const LearnerSpec& spec, const FeatureMatrix& x,
                                     std::span<const double> targets,
                                     std::span<const std::size_t> subset) {
  Regressor r = fit(spec, x, targets, subset);
  r.probability_ = true;
  return r;
}

double Regressor::predict_row(std::span<const double> row) const {
  if (row.size() != dim_) {
    throw InvalidArgument(
        fmt::format("feature dimension {} does not match the fitted {}", row.size(), dim_));
  }
  double value = 0.0;
  if (spec_.kind == LearnerSpec::Kind::kKnn) {
    std::vector<std::size_t> all(train_x_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto idx = nearest(train_x_, row, all, spec_.k_neighbors);
    for (std::size_t j : idx) value += train_y_[j];
    value /= static_cast<double>(idx.size());
  } else {
    value = intercept_;
    for (std::size_t c = 0; c < dim_; ++c) value += beta_[c] * (row[c] - mean_[c]) / scale_[c];
  }
  if (probability_) value = std::clamp(value, kProbabilityEps, 1.0 - kProbabilityEps);
  return value;
}

std::vector<double> Regressor::predict(const FeatureMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
  return out;
}

std::vector<double> Regressor::predict(const FeatureMatrix& x,
                                       std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) out[j] = predict_row(x.row(rows[j]));
  return out;
}

std::vector<double> survival_grid(const EvalDataset& d, const SurvivalEndpoint& endpoint) {
  if (!d.has_survival()) throw SchemaError("dataset has no survival columns");
  std::vector<double> grid(d.n);
  for (std::size_t i = 0; i < d.n; ++i) grid[i] = std::min((*d.event_time)[i], endpoint.t0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

SurvivalNuisances knn_survival_nuisances(const EvalDataset& d, const SurvivalEndpoint& endpoint,
                                         std::span<const std::size_t> train,
                                         std::span<const std::size_t> eval, std::size_t k,
                                         std::span<const double> grid) {
  if (!d.has_survival()) throw SchemaError("dataset has no survival columns");
  if (k < 1) throw InvalidArgument("knn needs k_neighbors >= 1");
  const auto& time = *d.event_time;
  const auto& observed = *d.event_observed;
  const std::vector<std::size_t> arms[2] = {arm_subset(d, train, 0), arm_subset(d, train, 1)};
  for (int a = 0; a < 2; ++a) {
    if (arms[a].empty()) {
      throw InvalidArgument(fmt::format("no training units in arm w = {}", a));
    }
  }

  auto curves = [&](std::span<const std::size_t> nbrs) {
    std::vector<std::pair<double, int>> events;
    std::vector<std::pair<double, int>> censorings;
    events.reserve(nbrs.size());
    censorings.reserve(nbrs.size());
    for (std::size_t j : nbrs) {
      events.emplace_back(time[j], observed[j]);
      censorings.emplace_back(time[j], 1 - observed[j]);
    }
    return std::pair<ProductLimit, ProductLimit>(ProductLimit(std::move(events)),
                                                 ProductLimit(std::move(censorings)));
  };

  SurvivalNuisances out;
  out.m0.resize(eval.size());
  out.m1.resize(eval.size());
  out.tables.resize(eval.size());
  for (std::size_t j = 0; j < eval.size(); ++j) {
    const std::size_t i = eval[j];
    const auto row = d.features.row(i);
    const int own = d.treatment[i];
    const double u = std::min(time[i], endpoint.t0);
    for (int a = 0; a < 2; ++a) {
      const auto nbrs = nearest(d.features, row, arms[a], k);
      const auto [t_curve, c_curve] = curves(nbrs);
      (a == 0 ? out.m0 : out.m1)[j] = km_q(t_curve, 0.0, endpoint);
      if (a != own) continue;
      auto& table = out.tables[j];
      double prev_sc = 1.0;
      auto add_row = [&](double s) {
        SurvivalRow r;
        r.s = s;
        r.q = km_q(t_curve, s, endpoint);
        r.sc = c_curve.before(s);
        r.dlambda = prev_sc > 0.0 ? 1.0 - r.sc / prev_sc : 0.0;
        prev_sc = r.sc;
        table.push_back(r);
      };
      for (double s : grid) {
        if (s >= u) break;
        add_row(s);
      }
      add_row(u);
    }
  }
  return out;
}

FoldAssignment assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument(fmt::format("cross-fitting needs k >= 2 folds, got {}", k));
  if (k > n / 2) {
    throw InvalidArgument(fmt::format("cross-fitting needs k <= n/2, got k = {} with n = {}", k, n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(Stream::kFolds)}));
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  FoldAssignment f;
  f.k = k;
  f.seed = seed;
  f.fold_of.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) f.fold_of[perm[pos]] = pos % k;
  return f;
}

CrossFitResult cross_fit(const EvalDataset& d, std::size_t k, const LearnerSpec& learner,
                         std::uint64_t seed, const CrossFitOptions& opts) {
  learner.validate();
  if (learner.kind == LearnerSpec::Kind::kOracle) {
    throw InvalidArgument("the oracle learner is not cross-fit; use oracle_nuisances");
  }
  if (opts.survival && learner.kind != LearnerSpec::Kind::kKnn) {
    throw InvalidArgument("survival nuisances need the knn learner");
  }
  CrossFitResult result;
  result.folds = assign_folds(d.n, k, seed);

  NuisanceEvaluations& nuis = result.nuisances;
  nuis.m0.assign(d.n, 0.0);
  nuis.m1.assign(d.n, 0.0);
  if (opts.fit_propensity) nuis.e_hat = std::vector<double>(d.n, 0.0);
  if (opts.survival) nuis.survival.resize(d.n);

  std::vector<double> grid;
  if (opts.survival) grid = survival_grid(d, *opts.survival);
  const std::vector<double> w_target(d.treatment.begin(), d.treatment.end());

  std::vector<std::vector<std::size_t>> eval(k);
  std::vector<std::vector<std::size_t>> train(k);
  for (std::size_t i = 0; i < d.n; ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      (result.folds.fold_of[i] == f ? eval[f] : train[f]).push_back(i);
    }
  }

  parallel_for(k, opts.threads, [&](std::size_t f) {
    if (opts.fit_propensity) {
      const Regressor e = Regressor::fit_probability(learner, d.features, w_target, train[f]);
      const auto pred = e.predict(d.features, eval[f]);
      for (std::size_t j = 0; j < eval[f].size(); ++j) (*nuis.e_hat)[eval[f][j]] = pred[j];
    }
    if (opts.survival) {
      SurvivalNuisances s = knn_survival_nuisances(d, *opts.survival, train[f], eval[f],
                                                   learner.k_neighbors, grid);
      for (std::size_t j = 0; j < eval[f].size(); ++j) {
        const std::size_t i = eval[f][j];
        nuis.m0[i] = s.m0[j];
        nuis.m1[i] = s.m1[j];
        nuis.survival[i] = std::move(s.tables[j]);
      }
      return;
    }
    for (int a = 0; a < 2; ++a) {
      const auto arm = arm_subset(d, train[f], a);
      if (arm.empty()) {
        throw InvalidArgument(fmt::format("fold {} has no training units in arm w = {}", f + 1, a));
      }
      const Regressor m = Regressor::fit(learner, d.features, d.outcome, arm);
      const auto pred = m.predict(d.features, eval[f]);
      auto& dst = a == 0 ? nuis.m0 : nuis.m1;
      for (std::size_t j = 0; j < eval[f].size(); ++j) dst[eval[f][j]] = pred[j];
    }
  });
  return result;
}

NuisanceEvaluations oracle_nuisances(const Scenario& scenario, const EvalDataset& d,
                                     const OracleOptions& opts) {
  scenario.validate();
  const std::size_t n = d.n;
  const FeatureMatrix& x = d.features;
  NuisanceEvaluations nuis;
  nuis.m0.resize(n);
  nuis.m1.resize(n);
  nuis.e_hat = std::vector<double>(n);
  auto& e = *nuis.e_hat;

  switch (scenario.kind) {
    case Scenario::Kind::kKink: {
      if (x.cols() != 1) {
        throw InvalidArgument(
            fmt::format("scenario mismatch: kink data has 1 feature, dataset has {}", x.cols()));
      }
      for (std::size_t i = 0; i < n; ++i) {
        nuis.m0[i] = 0.0;
        nuis.m1[i] = closed_form::kink_mu1(x.at(i, 0), scenario.p);
        e[i] = 0.5;
      }
      break;
    }
    case Scenario::Kind::kSetupA: {
      if (x.cols() != scenario.d) {
        throw InvalidArgument(fmt::format(
            "scenario mismatch: setup_a data has {} features, dataset has {}", scenario.d,
            x.cols()));
      }
      std::vector<double> tau(n);
      for (std::size_t i = 0; i < n; ++i) tau[i] = closed_form::setup_a_tau(x.row(i));
      double mean = std::accumulate(tau.begin(), tau.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (double t : tau) ss += (t - mean) * (t - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n - 1));
      const double scale = sd > 0.0 ? scenario.sigma_tau / sd : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        const double ei = closed_form::setup_a_propensity(row[0], row[1]);
        const double b = closed_form::setup_a_baseline(row);
        const double t = tau[i] * scale;
        e[i] = ei;
        nuis.m0[i] = b - ei * t;
        nuis.m1[i] = b + (1.0 - ei) * t;
      }
      break;
    }
    case Scenario::Kind::kSurvival: {
      if (x.cols() != 5 || !d.has_survival()) {
        throw InvalidArgument(
            "scenario mismatch: survival data needs 5 features and survival columns");
      }
      const SurvivalEndpoint& ep = scenario.endpoint;
      const std::vector<double> grid = opts.grid ? *opts.grid : survival_grid(d, ep);
      if (!std::is_sorted(grid.begin(), grid.end()) ||
          std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
        throw InvalidArgument("survival grid must be strictly increasing");
      }
      nuis.survival.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double x1 = x.at(i, 0);
        const double x2 = x.at(i, 1);
        const double x3 = x.at(i, 2);
        const int w = d.treatment[i];
        e[i] = closed_form::survival_propensity(x2);
        nuis.m0[i] = closed_form::survival_m(x1, x2, 0, ep);
        nuis.m1[i] = closed_form::survival_m(x1, x2, 1, ep);
        const double u = std::min((*d.event_time)[i], ep.t0);
        auto& table = nuis.survival[i];
        double prev_sc = 1.0;
        auto add_row = [&](double s) {
          SurvivalRow r;
          r.s = s;
          r.q = closed_form::survival_q(s, x1, x2, w, ep);
          r.sc = closed_form::survival_censoring_survival(s, x1, x3, w);
          r.dlambda = prev_sc > 0.0 ? 1.0 - r.sc / prev_sc : 0.0;
          prev_sc = r.sc;
          table.push_back(r);
        };
        const auto end = std::lower_bound(grid.begin(), grid.end(), u);
        table.reserve(static_cast<std::size_t>(end - grid.begin()) + 1);
        for (auto it = grid.begin(); it != end; ++it) add_row(*it);
        add_row(u);
      }
      break;
    }
  }
  return nuis;
}

}  // namespace rate
