#include "ncc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "ncc/rng.hpp"

namespace ncc {
namespace {

const boost::math::normal kStdNormal{0.0, 1.0};

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double cdf(double z) { return boost::math::cdf(kStdNormal, z); }

}  // namespace

// ---------------------------------------------------------------------------
// Baseline

Baseline::Baseline(Kind kind, double shape) : kind_(kind), shape_(shape), horizon_(0.0) {
  horizon_ = inverse_cumulative_hazard(kDefaultHorizonHazard);
}

Baseline Baseline::exponential() { return Baseline(Kind::exponential, 1.0); }

Baseline Baseline::weibull(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw ConfigError("weibull shape must be positive");
  return Baseline(Kind::weibull, shape);
}

Baseline Baseline::with_horizon(double t0) const {
  if (!(t0 > 0.0) || !(survival(t0) > 0.0)) {
    throw ConfigError("evaluation horizon must satisfy t0 > 0 and G(t0) > 0");
  }
  Baseline b = *this;
  b.horizon_ = t0;
  return b;
}

std::string Baseline::name() const {
  if (kind_ == Kind::exponential) return "exponential";
  std::ostringstream os;
  os << "weibull(" << shape_ << ")";
  return os.str();
}

double Baseline::cumulative_hazard(double t) const {
  if (t <= 0.0) return 0.0;
  return kind_ == Kind::exponential ? t : std::pow(t, shape_);
}

double Baseline::survival(double t) const { return std::exp(-cumulative_hazard(t)); }

double Baseline::hazard(double t) const {
  if (t < 0.0) return 0.0;
  if (kind_ == Kind::exponential) return 1.0;
  if (t == 0.0) return shape_ < 1.0 ? std::numeric_limits<double>::infinity() : (shape_ == 1.0 ? 1.0 : 0.0);
  return shape_ * std::pow(t, shape_ - 1.0);
}

double Baseline::density(double t) const {
  if (t < 0.0) return 0.0;
  return hazard(t) * survival(t);
}

double Baseline::inverse_cumulative_hazard(double x) const {
  if (x <= 0.0) return 0.0;
  return kind_ == Kind::exponential ? x : std::pow(x, 1.0 / shape_);
}

double Baseline::quantile(double u) const {
  if (!(u > 0.0) || u > 1.0) throw std::domain_error("baseline quantile: u must lie in (0, 1]");
  return inverse_cumulative_hazard(-std::log(u));
}

// ---------------------------------------------------------------------------
// CovariateLaw

CovariateLaw::CovariateLaw(Kind kind, double bound, double radius) : kind_(kind), bound_(bound), radius_(radius) {}

CovariateLaw CovariateLaw::standard_normal(double radius_cap) {
  if (!(radius_cap > 0.0)) throw ConfigError("moment radius must be positive");
  return CovariateLaw(Kind::normal, 0.0, radius_cap);
}

CovariateLaw CovariateLaw::truncated_normal(double bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw ConfigError("truncation bound must be positive and finite");
  return CovariateLaw(Kind::truncated_normal, bound, std::numeric_limits<double>::infinity());
}

CovariateLaw CovariateLaw::uniform() {
  return CovariateLaw(Kind::uniform, 0.0, std::numeric_limits<double>::infinity());
}

std::string CovariateLaw::name() const {
  switch (kind_) {
    case Kind::normal:
      return "normal";
    case Kind::truncated_normal: {
      std::ostringstream os;
      os << "truncated_normal(" << bound_ << ")";
      return os.str();
    }
    case Kind::uniform:
      return "uniform";
  }
  return "unknown";
}

double CovariateLaw::support_lower() const {
  switch (kind_) {
    case Kind::normal:
      return -std::numeric_limits<double>::infinity();
    case Kind::truncated_normal:
      return -bound_;
    case Kind::uniform:
      return 0.0;
  }
  return 0.0;
}

double CovariateLaw::support_upper() const {
  switch (kind_) {
    case Kind::normal:
      return std::numeric_limits<double>::infinity();
    case Kind::truncated_normal:
      return bound_;
    case Kind::uniform:
      return 1.0;
  }
  return 0.0;
}

double CovariateLaw::density(double z) const {
  switch (kind_) {
    case Kind::normal:
      return phi(z);
    case Kind::truncated_normal:
      if (z < -bound_ || z > bound_) return 0.0;
      return phi(z) / (cdf(bound_) - cdf(-bound_));
    case Kind::uniform:
      return (z >= 0.0 && z <= 1.0) ? 1.0 : 0.0;
  }
  return 0.0;
}

double CovariateLaw::mean() const { return kind_ == Kind::uniform ? 0.5 : 0.0; }

double CovariateLaw::variance() const {
  switch (kind_) {
    case Kind::normal:
      return 1.0;
    case Kind::truncated_normal: {
      const double mass = cdf(bound_) - cdf(-bound_);
      return 1.0 - 2.0 * bound_ * phi(bound_) / mass;
    }
    case Kind::uniform:
      return 1.0 / 12.0;
  }
  return 0.0;
}

double CovariateLaw::exp_moment(double theta) const {
  switch (kind_) {
    case Kind::normal:
      return std::exp(0.5 * theta * theta);
    case Kind::truncated_normal: {
      const double mass = cdf(bound_) - cdf(-bound_);
      return std::exp(0.5 * theta * theta) * (cdf(bound_ - theta) - cdf(-bound_ - theta)) / mass;
    }
    case Kind::uniform:
      return theta == 0.0 ? 1.0 : std::expm1(theta) / theta;
  }
  return 0.0;
}

double CovariateLaw::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::normal:
      return rng.normal();
    case Kind::truncated_normal: {
      const double lo = cdf(-bound_);
      const double hi = cdf(bound_);
      return boost::math::quantile(kStdNormal, lo + (hi - lo) * rng.uniform_open());
    }
    case Kind::uniform:
      return rng.uniform_open();
  }
  return 0.0;
}

quadrature::Rule CovariateLaw::quadrature(int order) const {
  if (kind_ == Kind::normal) return quadrature::gauss_hermite_normal(order);
  quadrature::Rule rule = quadrature::gauss_legendre(order, support_lower(), support_upper());
  for (std::size_t k = 0; k < rule.size(); ++k) rule.weights[k] *= density(rule.nodes[k]);
  return rule;
}

// ---------------------------------------------------------------------------
// GroupSizeDistribution

GroupSizeDistribution::GroupSizeDistribution(std::vector<std::pair<int, double>> pmf) {
  if (pmf.empty()) throw ConfigError("group size distribution is empty");
  std::sort(pmf.begin(), pmf.end());
  double total = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const auto [eta, p] = pmf[k];
    if (eta < 2) throw ConfigError("group sizes must be >= 2");
    if (k > 0 && pmf[k - 1].first == eta) throw ConfigError("duplicate group size in distribution");
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("group size probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("group size probabilities must sum to 1");
  for (const auto& [eta, p] : pmf) {
    if (p > 0.0) {
      sizes_.push_back(eta);
      probs_.push_back(p / total);
    }
  }
}

GroupSizeDistribution GroupSizeDistribution::degenerate(int eta) { return GroupSizeDistribution({{eta, 1.0}}); }

GroupSizeDistribution GroupSizeDistribution::uniform_on(const std::vector<int>& sizes) {
  std::vector<std::pair<int, double>> pmf;
  for (int eta : sizes) pmf.emplace_back(eta, 1.0 / static_cast<double>(sizes.size()));
  return GroupSizeDistribution(std::move(pmf));
}

double GroupSizeDistribution::pmf(int eta) const {
  const auto it = std::lower_bound(sizes_.begin(), sizes_.end(), eta);
  if (it == sizes_.end() || *it != eta) return 0.0;
  return probs_[static_cast<std::size_t>(it - sizes_.begin())];
}

double GroupSizeDistribution::mean() const {
  return expect([](int eta) { return static_cast<double>(eta); });
}

double GroupSizeDistribution::mean_inverse() const {
  return expect([](int eta) { return 1.0 / eta; });
}

double GroupSizeDistribution::variance_inverse() const {
  const double mu = mean_inverse();
  return expect([mu](int eta) { return (1.0 / eta - mu) * (1.0 / eta - mu); });
}

int GroupSizeDistribution::sample(RngStream& rng) const {
  const double u = rng.uniform_open();
  double acc = 0.0;
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    acc += probs_[k];
    if (u < acc) return sizes_[k];
  }
  return sizes_.back();
}

// ---------------------------------------------------------------------------
// Observation

double Observation::failure_covariate() const {
  const auto it = std::lower_bound(sampled.begin(), sampled.end(), failure);
  if (it == sampled.end() || *it != failure) throw std::invalid_argument("observation: failure not in sampled set");
  return covariates[static_cast<std::size_t>(it - sampled.begin())];
}

void Observation::check_structure() const {
  if (eta < 1) throw std::invalid_argument("observation: eta must be positive");
  if (failure < 1 || failure > eta) throw std::invalid_argument("observation: failure label outside [eta]");
  if (sampled.empty()) throw std::invalid_argument("observation: empty sampled set");
  if (covariates.size() != sampled.size()) throw std::invalid_argument("observation: |z_r| != |r|");
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    if (sampled[k] < 1 || sampled[k] > eta) throw std::invalid_argument("observation: sampled label outside [eta]");
    if (k > 0 && sampled[k] <= sampled[k - 1]) throw std::invalid_argument("observation: sampled set not sorted/distinct");
    if (!std::isfinite(covariates[k])) throw std::invalid_argument("observation: non-finite covariate");
  }
  if (!std::binary_search(sampled.begin(), sampled.end(), failure)) {
    throw std::invalid_argument("observation: failure not in sampled set");
  }
  if (!(time >= 0.0) || !std::isfinite(time)) throw std::invalid_argument("observation: time must be finite and >= 0");
}

void Observation::check_structure(int m) const {
  check_structure();
  if (sample_size() != m) throw std::invalid_argument("observation: |r| != m");
}

// ---------------------------------------------------------------------------
// Operations

double sampling_weight(int eta, int m) {
  if (m < 1 || m > eta) throw std::domain_error("sampling_weight: requires 1 <= m <= eta");
  return 1.0 / boost::math::binomial_coefficient<double>(static_cast<unsigned>(eta - 1),
                                                          static_cast<unsigned>(m - 1));
}

double survival_given_covariate(const Baseline& baseline, double t, double z, double theta) {
  const double s = baseline.survival(t);
  if (s <= 0.0) return 0.0;
  return std::exp(std::exp(theta * z) * std::log(s));
}

double density_given_covariate(const Baseline& baseline, double t, double z, double theta) {
  const double s = baseline.survival(t);
  if (s <= 0.0) return 0.0;
  const double rr = std::exp(theta * z);
  return rr * baseline.density(t) * std::exp((rr - 1.0) * std::log(s));
}

double mixture_survival(const ModelConfig& config, double t, double theta, int order) {
  if (std::abs(theta) >= config.covariate.moment_radius()) {
    throw std::domain_error("mixture_survival: |theta| must be below the moment radius");
  }
  const double s = config.baseline.survival(t);
  if (s <= 0.0) return 0.0;
  if (s == 1.0 || theta == 0.0) return s;
  const double log_s = std::log(s);
  const quadrature::Rule rule = config.covariate.quadrature(order);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    acc += rule.weights[k] * std::exp(std::exp(theta * rule.nodes[k]) * log_s);
  }
  return acc;
}

double observation_density(const Observation& x, const ModelConfig& config) {
  x.check_structure(config.m);
  const double rho = config.group_size.pmf(x.eta);
  if (rho == 0.0 || x.eta < config.m) return 0.0;
  const double theta = config.theta;
  if (theta == 0.0) return null_density(x, config);
  const Baseline& b = config.baseline;

  double value = sampling_weight(x.eta, config.m) * rho;
  for (std::size_t k = 0; k < x.sampled.size(); ++k) {
    const double z = x.covariates[k];
    value *= config.covariate.density(z);
    value *= x.sampled[k] == x.failure ? density_given_covariate(b, x.time, z, theta)
                                       : survival_given_covariate(b, x.time, z, theta);
  }
  if (x.eta > config.m) value *= std::pow(mixture_survival(config, x.time, theta), x.eta - config.m);
  return value;
}

double null_density(const Observation& x, const ModelConfig& config) {
  x.check_structure(config.m);
  const double rho = config.group_size.pmf(x.eta);
  if (rho == 0.0 || x.eta < config.m) return 0.0;
  double value = sampling_weight(x.eta, config.m) * rho * config.baseline.density(x.time) *
                 std::pow(config.baseline.survival(x.time), x.eta - 1);
  for (double z : x.covariates) value *= config.covariate.density(z);
  return value;
}

ValidationReport validate_config(const ModelConfig& config) {
  if (config.m < 1) throw ConfigError("m must be >= 1");
  ValidationReport r;
  const auto& sizes = config.group_size.support();
  r.eta_at_least_two = config.group_size.min_size() >= 2;
  r.m_within_group_sizes = config.m <= config.group_size.min_size();

  const CovariateLaw& h = config.covariate;
  r.positivity = h.nonnegative() && config.theta >= 0.0 && r.m_within_group_sizes;
  r.boundedness = h.bounded() && r.m_within_group_sizes;
  r.cohort_size = std::all_of(sizes.begin(), sizes.end(), [&](int eta) { return config.m <= eta - 4; });
  r.exp_moment_finite = std::abs(config.theta) < h.moment_radius() && std::isfinite(h.exp_moment(config.theta));

  r.xi_functional = h.exp_moment(config.theta_xi) + h.exp_moment(-config.theta_xi);
  r.xi_bound_holds = config.theta_xi < h.moment_radius() && r.xi_functional < config.xi;

  if (!r.eta_at_least_two) r.warnings.emplace_back("group size below 2 has positive probability");
  if (!r.m_within_group_sizes) r.warnings.emplace_back("m exceeds the smallest group size; estimation is undefined");
  if (!r.any_regularity_condition()) {
    r.warnings.emplace_back("none of the positivity, boundedness or cohort-size conditions holds");
  }
  if (!r.exp_moment_finite) r.warnings.emplace_back("|theta| is not inside the exponential-moment radius");
  if (!r.xi_bound_holds) r.warnings.emplace_back("M_h(theta_xi) + M_h(-theta_xi) < xi does not hold");
  return r;
}

}  // namespace ncc
