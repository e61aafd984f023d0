#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "ncc/parallel.hpp"
#include "ncc/sampler.hpp"

namespace ncc {

/// The partial likelihood carries no information (|r| < 2 or constant covariates).
class DegenerateLikelihoodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Monotone likelihood: the maximizer runs off to infinity.
class SeparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// log L(theta) = sum_j [theta z_{i_j} - log sum_{k in r_j} exp(theta z_k)].
double partial_loglik(const Dataset& dataset, double theta, Exec exec = Exec::parallel);

struct ScoreInformation {
  double score = 0.0;
  double information = 0.0;
};

/// First derivative and negative second derivative of partial_loglik.
ScoreInformation score_and_information(const Dataset& dataset, double theta, Exec exec = Exec::parallel);

struct SolverOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  int max_halvings = 30;
  double separation_bound = 50.0;
  Exec exec = Exec::parallel;
};

struct MpleFit {
  double theta_hat = 0.0;
  double standard_error = 0.0;
  int iterations = 0;
  double score_at_solution = 0.0;
  /// For the whole dataset, not per observation.
  double observed_information = 0.0;
  double loglik = 0.0;
  bool converged = false;
};

/// Newton's method from theta = 0 with step halving.
/// Throws SeparationError or DegenerateLikelihoodError.
MpleFit fit_mple(const Dataset& dataset, const SolverOptions& options = {});

/// m / ((m - 1) var_z), the null asymptotic variance of sqrt(n)(theta_hat - theta).
double mple_asymptotic_variance(int m, double var_z);

/// Right-continuous step function: `initial` before the first jump time,
/// values[k] on [times[k], times[k + 1]).
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> times, std::vector<double> values, double initial);

  double operator()(double t) const;

  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] const std::vector<double>& values() const { return values_; }
  [[nodiscard]] double initial() const { return initial_; }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  double initial_ = 0.0;
};

struct BreslowFit {
  StepFunction cumulative_hazard;
  StepFunction survival;
  /// Records sharing a failure time with an earlier record.
  std::size_t tie_count = 0;
};

/// Pooled Horvitz–Thompson Breslow estimator:
///   L(t) = sum_{t_j <= t} 1 / sum_{t_l >= t_j} (eta_l / m_l) sum_{k in r_l} exp(theta z_k),
/// with survival exp(-L(t)).
BreslowFit breslow(const Dataset& dataset, double theta_hat);

/// Columns t,cumhaz,survival, one row per jump time.
void write_breslow_csv(std::ostream& out, const BreslowFit& fit);
/// key,value rows.
void write_fit_csv(std::ostream& out, const MpleFit& fit);

}  // namespace ncc
