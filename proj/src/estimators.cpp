#include "ncc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

namespace ncc {
namespace {

std::size_t failure_slot(const Observation& o) {
  const auto it = std::lower_bound(o.sampled.begin(), o.sampled.end(), o.failure);
  if (it == o.sampled.end() || *it != o.failure) throw std::invalid_argument("failure is not in the sampled set");
  return static_cast<std::size_t>(it - o.sampled.begin());
}

void require_informative_sets(const Dataset& ds) {
  if (ds.empty()) throw DegenerateLikelihoodError("partial likelihood of an empty dataset");
  for (const auto& o : ds.observations) {
    if (o.sample_size() < 2) throw DegenerateLikelihoodError("partial likelihood needs |r| >= 2");
    if (o.covariates.size() != o.sampled.size()) throw std::invalid_argument("observation covariates do not match r");
    failure_slot(o);
  }
}

// Terms are written through d_k = z_k - z_i so that a common shift of the
// covariates cancels before any exponential is taken.
double loglik_term(const Observation& o, double theta) {
  const double zi = o.covariates[failure_slot(o)];
  double top = 0.0;
  for (double z : o.covariates) top = std::max(top, theta * (z - zi));
  double acc = 0.0;
  for (double z : o.covariates) acc += std::exp(theta * (z - zi) - top);
  return -(top + std::log(acc));
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

// Mean and variance of d under weights proportional to exp(theta d).
Moments tilted_moments(const Observation& o, double theta) {
  const double zi = o.covariates[failure_slot(o)];
  double top = 0.0;
  for (double z : o.covariates) top = std::max(top, theta * (z - zi));
  double w = 0.0;
  double s1 = 0.0;
  for (double z : o.covariates) {
    const double e = std::exp(theta * (z - zi) - top);
    w += e;
    s1 += e * (z - zi);
  }
  const double mean = s1 / w;
  double s2 = 0.0;
  for (double z : o.covariates) {
    const double d = z - zi;
    s2 += std::exp(theta * d - top) * (d - mean) * (d - mean);
  }
  return {mean, s2 / w};
}

}  // namespace

double partial_loglik(const Dataset& dataset, double theta, Exec exec) {
  require_informative_sets(dataset);
  const auto& obs = dataset.observations;
  return reduce_sum(obs.size(), [&](std::size_t j) { return loglik_term(obs[j], theta); }, exec);
}

ScoreInformation score_and_information(const Dataset& dataset, double theta, Exec exec) {
  require_informative_sets(dataset);
  const auto& obs = dataset.observations;
  // Two passes keep the reduction scalar; each pass is cheap.
  ScoreInformation si;
  si.score = reduce_sum(obs.size(), [&](std::size_t j) { return -tilted_moments(obs[j], theta).mean; }, exec);
  si.information = reduce_sum(obs.size(), [&](std::size_t j) { return tilted_moments(obs[j], theta).var; }, exec);
  return si;
}

MpleFit fit_mple(const Dataset& dataset, const SolverOptions& opt) {
  require_informative_sets(dataset);
  const bool informative = std::any_of(dataset.observations.begin(), dataset.observations.end(), [](const auto& o) {
    return std::any_of(o.covariates.begin(), o.covariates.end(), [&](double z) { return z != o.covariates.front(); });
  });
  if (!informative) throw DegenerateLikelihoodError("covariates are constant within every sampled set");

  MpleFit fit;
  double theta = 0.0;
  double ll = partial_loglik(dataset, theta, opt.exec);
  ScoreInformation si = score_and_information(dataset, theta, opt.exec);
  const double first_sign = si.score > 0 ? 1.0 : -1.0;
  bool monotone = true;

  // Converged once the Newton step is below tolerance relative to theta.
  // A separated likelihood keeps taking steps of order one while its score
  // decays exponentially, so an absolute score test would stop it early.
  int it = 0;
  while (it < opt.max_iterations) {
    if (!(si.information > 0.0)) {
      if (si.score == 0.0) break;
      throw SeparationError("information vanished during Newton iteration");
    }
    double step = si.score / si.information;
    if (std::abs(step) <= opt.tolerance * (1.0 + std::abs(theta))) {
      fit.converged = true;
      break;
    }
    ++it;
    double next = theta + step;
    double next_ll = partial_loglik(dataset, next, opt.exec);
    // Small steps are taken as is: near the optimum the likelihood change
    // drops below rounding and halving would stall.
    int halvings = 0;
    const bool guarded = std::abs(step) > 1e-3 * (1.0 + std::abs(theta));
    while (guarded && !(next_ll >= ll) && halvings < opt.max_halvings) {
      step *= 0.5;
      next = theta + step;
      next_ll = partial_loglik(dataset, next, opt.exec);
      ++halvings;
    }
    if (std::abs(next) > opt.separation_bound) {
      throw SeparationError("|theta| exceeded " + std::to_string(opt.separation_bound) + " (monotone likelihood)");
    }
    if (std::abs(next) <= std::abs(theta)) monotone = false;
    theta = next;
    ll = next_ll;
    si = score_and_information(dataset, theta, opt.exec);
    if (si.score * first_sign <= 0.0) monotone = false;
  }

  if (!fit.converged && monotone) throw SeparationError("score kept its sign while |theta| grew (monotone likelihood)");
  fit.theta_hat = theta;
  fit.iterations = it;
  fit.score_at_solution = si.score;
  fit.observed_information = si.information;
  fit.standard_error = 1.0 / std::sqrt(si.information);
  fit.loglik = ll;
  return fit;
}

double mple_asymptotic_variance(int m, double var_z) {
  if (m < 2) throw std::domain_error("mple_asymptotic_variance: m < 2 carries no information");
  if (!(var_z > 0.0)) throw std::domain_error("mple_asymptotic_variance: var_z must be positive");
  return m / ((m - 1) * var_z);
}

StepFunction::StepFunction(std::vector<double> times, std::vector<double> values, double initial)
    : times_(std::move(times)), values_(std::move(values)), initial_(initial) {
  if (times_.size() != values_.size()) throw std::invalid_argument("StepFunction: size mismatch");
  if (!std::is_sorted(times_.begin(), times_.end())) throw std::invalid_argument("StepFunction: times must be sorted");
}

double StepFunction::operator()(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

BreslowFit breslow(const Dataset& dataset, double theta_hat) {
  if (dataset.empty()) throw std::invalid_argument("breslow: empty dataset");
  const auto& obs = dataset.observations;
  const std::size_t n = obs.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return obs[a].time < obs[b].time; });

  std::vector<double> weight(n);
  for (std::size_t p = 0; p < n; ++p) {
    const Observation& o = obs[order[p]];
    double s = 0.0;
    for (double z : o.covariates) s += std::exp(theta_hat * z);
    weight[p] = static_cast<double>(o.eta) / o.sample_size() * s;
  }
  // suffix[p] = sum of weights at sorted positions >= p.
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t p = n; p-- > 0;) suffix[p] = suffix[p + 1] + weight[p];

  BreslowFit fit;
  std::vector<double> times;
  std::vector<double> cumhaz;
  double total = 0.0;
  std::size_t block = 0;
  while (block < n) {
    const double t = obs[order[block]].time;
    std::size_t end = block;
    while (end < n && obs[order[end]].time == t) ++end;
    // Every record tied at t is at risk at t.
    const double denom = suffix[block];
    total += static_cast<double>(end - block) / denom;
    fit.tie_count += end - block - 1;
    times.push_back(t);
    cumhaz.push_back(total);
    block = end;
  }
  std::vector<double> surv(cumhaz.size());
  std::transform(cumhaz.begin(), cumhaz.end(), surv.begin(), [](double c) { return std::exp(-c); });
  fit.cumulative_hazard = StepFunction(times, std::move(cumhaz), 0.0);
  fit.survival = StepFunction(std::move(times), std::move(surv), 1.0);
  return fit;
}

void write_breslow_csv(std::ostream& out, const BreslowFit& fit) {
  out << "t,cumhaz,survival\n";
  const auto& t = fit.cumulative_hazard.times();
  char buf[96];
  for (std::size_t k = 0; k < t.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", t[k], fit.cumulative_hazard.values()[k],
                  fit.survival.values()[k]);
    out << buf;
  }
}

void write_fit_csv(std::ostream& out, const MpleFit& fit) {
  char buf[64];
  auto row = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << ',' << buf << '\n';
  };
  out << "key,value\n";
  row("theta_hat", fit.theta_hat);
  row("standard_error", fit.standard_error);
  out << "iterations," << fit.iterations << '\n';
  row("score_at_solution", fit.score_at_solution);
  row("observed_information", fit.observed_information);
  row("loglik", fit.loglik);
  out << "converged," << (fit.converged ? 1 : 0) << '\n';
}

}  // namespace ncc
