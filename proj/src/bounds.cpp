#include "ncc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ncc {

BoundsInput BoundsInput::from_config(const ModelConfig& config) {
  BoundsInput in;
  in.group_size = config.group_size;
  in.m = config.m;
  in.var_z = config.covariate.variance();
  in.mean_z = config.covariate.mean();
  in.baseline = config.baseline;
  return in;
}

double lemma43_integral(int eta, int k, int j) {
  if (eta < k) throw std::domain_error("lemma43_integral: eta < k");
  if (j < 0) throw std::domain_error("lemma43_integral: j < 0");
  const double base = eta - k + 1;
  return (j % 2 ? -1.0 : 1.0) * std::tgamma(j + 1.0) / std::pow(base, j + 1);
}

double effective_information(const BoundsInput& in) {
  if (in.m < 1) throw std::domain_error("effective_information: m < 1");
  const double e_inv = in.group_size.mean_inverse();
  const double v_inv = in.group_size.variance_inverse();
  return in.var_z * (1.0 - 1.0 / in.m) + in.m * in.var_z * (2.0 * v_inv + e_inv * e_inv);
}

double effective_information_limit(int m, double var_z) {
  if (m < 1) throw std::domain_error("effective_information_limit: m < 1");
  return var_z * (m - 1) / m;
}

MomentFunctionals moment_functionals(double t, const BoundsInput& in) {
  if (t < 0.0) throw std::domain_error("moment_functionals: t < 0");
  const double s = in.baseline.survival(t);
  MomentFunctionals mf;
  mf.m0 = in.group_size.expect([s](int eta) { return eta * std::pow(s, eta); });
  mf.m1 = in.mean_z * mf.m0;
  return mf;
}

namespace {

void check_horizon(double s, double t, const BoundsInput& in) {
  if (s < 0.0 || t < 0.0) throw std::domain_error("covariance bound: negative time");
  const double top = std::max(s, t);
  if (top > in.baseline.horizon() || !(in.baseline.survival(top) > 0.0)) {
    throw std::domain_error("covariance bound: time beyond the evaluation horizon");
  }
}

// Nodes per panel; panels are short enough that the integrand's exponent
// changes by at most 4 across one.
constexpr int kPanelOrder = 32;
constexpr double kPanelSpan = 4.0;

}  // namespace

double variance_integral(double s, double t, const BoundsInput& in) {
  check_horizon(s, t, in);
  // In the cumulative-hazard variable y = -log G(u), dG = e^{-y} dy and the
  // integrand becomes 1 / sum_eta p(eta) eta e^{-eta y}.
  const double upper = in.baseline.cumulative_hazard(std::min(s, t));
  if (upper <= 0.0) return 0.0;
  const auto& sizes = in.group_size.support();
  const auto& probs = in.group_size.probabilities();
  const int eta_min = sizes.front();
  auto integrand = [&](double y) {
    // Scaled by e^{eta_min y} to avoid underflow for large y.
    double acc = 0.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) acc += probs[k] * sizes[k] * std::exp(-(sizes[k] - eta_min) * y);
    return std::exp(eta_min * y) / acc;
  };
  const int panels = std::max(1, static_cast<int>(std::ceil(upper * in.group_size.max_size() / kPanelSpan)));
  const auto rule = quadrature::gauss_legendre(kPanelOrder);
  const double width = upper / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * width;
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      acc += rule.weights[k] * integrand(a + 0.5 * width * (rule.nodes[k] + 1.0));
    }
    total += 0.5 * width * acc;
  }
  return total;
}

double kfunction(double s, double t, const BoundsInput& in) {
  const double v = variance_integral(s, t, in);
  return in.baseline.survival(s) * in.baseline.survival(t) * v;
}

namespace {

double plug_in_term(double s, double t, const BoundsInput& in, double information) {
  // G log G at each time, multiplied last so the result is symmetric in (s, t).
  const double ps = in.baseline.survival(s) * -in.baseline.cumulative_hazard(s);
  const double pt = in.baseline.survival(t) * -in.baseline.cumulative_hazard(t);
  const double num = in.mean_z * in.mean_z * (ps * pt);
  if (num == 0.0) return 0.0;
  if (!(information > 0.0)) return std::numeric_limits<double>::infinity();
  return num / information;
}

}  // namespace

double breslow_covariance_omega(double s, double t, const BoundsInput& in) {
  return kfunction(s, t, in) + plug_in_term(s, t, in, effective_information_limit(in.m, in.var_z));
}

double survival_bound_kstar(double s, double t, const BoundsInput& in) {
  return kfunction(s, t, in) + plug_in_term(s, t, in, effective_information(in));
}

}  // namespace ncc
