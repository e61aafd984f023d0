#pragma once

#include "ncc/model.hpp"

namespace ncc {

struct BoundsInput {
  GroupSizeDistribution group_size = GroupSizeDistribution::degenerate(2);
  int m = 2;
  double var_z = 1.0;
  double mean_z = 0.0;
  Baseline baseline = Baseline::exponential();

  static BoundsInput from_config(const ModelConfig& config);
};

/// (-1)^j (eta - k + 1)^{-(j+1)} j!, the value of
/// int_0^inf s(t) S(t)^{eta-k} (log S(t))^j dt for any continuous density s.
double lemma43_integral(int eta, int k, int j);

/// Effective information for finite group sizes:
///   Var Z (1 - 1/m) + m Var Z (2 Var(1/eta) + [E(1/eta)]^2).
double effective_information(const BoundsInput& input);

/// Limit of effective_information as eta grows: Var Z (m - 1) / m.
double effective_information_limit(int m, double var_z);

struct MomentFunctionals {
  double m0 = 0.0;  ///< E[eta G(t)^eta]
  double m1 = 0.0;  ///< E Z * m0
};

MomentFunctionals moment_functionals(double t, const BoundsInput& input);

/// int_0^{min(s,t)} dG / E[eta G(u)^{eta+1}].
double variance_integral(double s, double t, const BoundsInput& input);

/// K(s, t) = G(s) G(t) variance_integral(s, t).
double kfunction(double s, double t, const BoundsInput& input);

/// K(s, t) + (EZ)^2 G(s) G(t) log G(s) log G(t) / I, with the limiting
/// information effective_information_limit as I.
double breslow_covariance_omega(double s, double t, const BoundsInput& input);

/// Same as breslow_covariance_omega with the finite-eta effective_information.
double survival_bound_kstar(double s, double t, const BoundsInput& input);

}  // namespace ncc
