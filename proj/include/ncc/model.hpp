#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ncc/quadrature.hpp"

namespace ncc {

class RngStream;

/// Raised for structurally invalid model configurations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Baseline failure-time law
// ---------------------------------------------------------------------------

/// Baseline failure density g on [0, inf) with survival, hazard and exact
/// quantile map. Two families are built in: Exp(1) and Weibull(shape, 1).
class Baseline {
 public:
  enum class Kind { exponential, weibull };

  /// Default cumulative-hazard level of the evaluation horizon T0.
  static constexpr double kDefaultHorizonHazard = 8.0;

  static Baseline exponential();
  static Baseline weibull(double shape);

  /// Same law with a different evaluation horizon T0 (must satisfy G(T0) > 0).
  [[nodiscard]] Baseline with_horizon(double t0) const;

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] double shape() const { return shape_; }
  [[nodiscard]] double horizon() const { return horizon_; }
  [[nodiscard]] std::string name() const;

  [[nodiscard]] double density(double t) const;
  [[nodiscard]] double survival(double t) const;
  [[nodiscard]] double hazard(double t) const;
  [[nodiscard]] double cumulative_hazard(double t) const;
  /// Inverse survival map: the t with survival(t) = u, for u in (0, 1].
  [[nodiscard]] double quantile(double u) const;
  /// The t with cumulative_hazard(t) = x, for x >= 0.
  [[nodiscard]] double inverse_cumulative_hazard(double x) const;

 private:
  Baseline(Kind kind, double shape);

  Kind kind_;
  double shape_;
  double horizon_;
};

// ---------------------------------------------------------------------------
// Covariate law
// ---------------------------------------------------------------------------

/// Marginal covariate density h with exact moments and exponential moments.
class CovariateLaw {
 public:
  enum class Kind { normal, truncated_normal, uniform };

  /// Radius declared for the standard normal, on which M_h is finite
  /// for every theta but which keeps e^{theta z} numerically tame.
  static constexpr double kNormalRadiusCap = 2.0;

  static CovariateLaw standard_normal(double radius_cap = kNormalRadiusCap);
  /// Standard normal truncated to [-bound, bound].
  static CovariateLaw truncated_normal(double bound);
  /// Uniform on [0, 1].
  static CovariateLaw uniform();

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::string name() const;
  /// Truncation bound c for the truncated normal (0 otherwise).
  [[nodiscard]] double bound() const { return bound_; }

  [[nodiscard]] double density(double z) const;
  [[nodiscard]] double mean() const;
  [[nodiscard]] double variance() const;
  /// M_h(theta) = E exp(theta Z).
  [[nodiscard]] double exp_moment(double theta) const;
  /// theta_kappa: M_h is treated as finite on (-radius, radius).
  [[nodiscard]] double moment_radius() const { return radius_; }

  [[nodiscard]] bool bounded() const { return kind_ != Kind::normal; }
  [[nodiscard]] bool nonnegative() const { return kind_ == Kind::uniform; }
  [[nodiscard]] double support_lower() const;
  [[nodiscard]] double support_upper() const;

  /// Inverse-transform draw from h.
  double sample(RngStream& rng) const;

  /// Quadrature rule for integrals against h: sum_k w_k f(z_k) ~ int f h dz.
  /// Gauss–Hermite for the normal, Gauss–Legendre on the support otherwise.
  [[nodiscard]] quadrature::Rule quadrature(int order) const;

 private:
  CovariateLaw(Kind kind, double bound, double radius);

  Kind kind_;
  double bound_;
  double radius_;
};

// ---------------------------------------------------------------------------
// Group size law
// ---------------------------------------------------------------------------

/// Finite-support law of the group (stratum) size eta.
class GroupSizeDistribution {
 public:
  /// Pairs (eta, probability). Sizes must be distinct integers >= 2 and
  /// probabilities nonnegative summing to 1 (within 1e-9; renormalized).
  explicit GroupSizeDistribution(std::vector<std::pair<int, double>> pmf);

  static GroupSizeDistribution degenerate(int eta);
  static GroupSizeDistribution uniform_on(const std::vector<int>& sizes);

  /// Sorted support, with zero-probability sizes removed.
  [[nodiscard]] const std::vector<int>& support() const { return sizes_; }
  [[nodiscard]] const std::vector<double>& probabilities() const { return probs_; }
  [[nodiscard]] double pmf(int eta) const;
  [[nodiscard]] int min_size() const { return sizes_.front(); }
  [[nodiscard]] int max_size() const { return sizes_.back(); }

  /// E f(eta).
  template <class F>
  [[nodiscard]] double expect(F&& f) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < sizes_.size(); ++k) acc += probs_[k] * f(sizes_[k]);
    return acc;
  }

  [[nodiscard]] double mean() const;
  [[nodiscard]] double mean_inverse() const;
  [[nodiscard]] double variance_inverse() const;

  int sample(RngStream& rng) const;

 private:
  std::vector<int> sizes_;
  std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// Observation and configuration
// ---------------------------------------------------------------------------

/// One stratum record X = (eta, i, r, t, z_r). Member labels are 1-based,
/// `sampled` is sorted and `covariates[k]` belongs to member `sampled[k]`.
struct Observation {
  int eta = 0;
  int failure = 0;
  std::vector<int> sampled;
  double time = 0.0;
  std::vector<double> covariates;

  [[nodiscard]] int sample_size() const { return static_cast<int>(sampled.size()); }
  /// Covariate of the failed member.
  [[nodiscard]] double failure_covariate() const;

  /// Throws std::invalid_argument unless i in r, r subset of [eta], r sorted
  /// and distinct, |z_r| = |r|, t >= 0 and finite.
  void check_structure() const;
  void check_structure(int m) const;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ModelConfig {
  Baseline baseline = Baseline::exponential();
  CovariateLaw covariate = CovariateLaw::standard_normal();
  GroupSizeDistribution group_size = GroupSizeDistribution::degenerate(2);
  /// Number of sampled members per stratum (failure plus m - 1 controls).
  int m = 2;
  double theta = 0.0;
  /// Existence constants bounding the covariate parameter space; recorded
  /// in validation output only.
  double xi = std::numeric_limits<double>::infinity();
  double theta_xi = 0.0;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// K_{eta,m} = 1 / C(eta - 1, m - 1), the probability of a given sampled set.
double sampling_weight(int eta, int m);

/// Survival of an individual with covariate z: G(t)^{exp(theta z)}.
double survival_given_covariate(const Baseline& baseline, double t, double z, double theta);

/// Density of the individual failure time with covariate z.
double density_given_covariate(const Baseline& baseline, double t, double z, double theta);

/// Default order of the covariate quadrature behind mixture_survival.
inline constexpr int kMixtureOrder = 64;

/// Mixture survival int G(t)^{exp(theta z)} h(z) dz. Throws
/// std::domain_error when |theta| >= theta_kappa.
double mixture_survival(const ModelConfig& config, double t, double theta, int order = kMixtureOrder);

/// Observation density under config.theta.
double observation_density(const Observation& x, const ModelConfig& config);

/// Observation density at theta = 0.
double null_density(const Observation& x, const ModelConfig& config);

struct ValidationReport {
  bool eta_at_least_two = false;
  bool m_within_group_sizes = false;  ///< m <= min support of eta
  bool positivity = false;            ///< condition (i)
  bool boundedness = false;           ///< condition (ii)
  bool cohort_size = false;           ///< condition (iii)
  bool exp_moment_finite = false;     ///< |theta| < theta_kappa and M_h finite there
  double xi_functional = 0.0;         ///< M_h(theta_xi) + M_h(-theta_xi)
  bool xi_bound_holds = false;
  std::vector<std::string> warnings;

  [[nodiscard]] bool any_regularity_condition() const { return positivity || boundedness || cohort_size; }
  /// True when estimation can run: m fits every group size and eta >= 2.
  [[nodiscard]] bool usable() const { return eta_at_least_two && m_within_group_sizes; }
};

/// Checks the regularity conditions of the efficiency result. Throws
/// ConfigError for m < 1; otherwise reports and warns.
ValidationReport validate_config(const ModelConfig& config);

}  // namespace ncc
