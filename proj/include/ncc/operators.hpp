#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ncc/model.hpp"
#include "ncc/parallel.hpp"
#include "ncc/rng.hpp"

namespace ncc {

// Discretized L2 calculus at the null model.
//
// Time is parametrized by x = -log G(t), the baseline cumulative hazard, so
// that g(t) dt = e^{-x} dx and every quantity below is baseline-free.
// Functions are stored as coefficients relative to the root densities:
//
//   TimeFunction       a(x)  = alpha / g^{1/2}
//   CovariateFunction  b(z)  = beta / h^{1/2}
//   SigmaFunction      phi   = mu / f0^{1/2}
//
// The sigma-sum over (eta, i, r) is collapsed by symmetry: f0 depends on
// (i, r) only through which sampled slot failed, so each eta contributes
// weight p(eta) * eta. A covariate tuple has m slots and slot 0 is the
// failure.

struct SchemeOptions {
  /// Upper end of the x grid.
  double time_max = 60.0;
  /// Gauss–Legendre nodes per time panel.
  int panel_order = 16;
  /// Divides every panel width (2 doubles the time resolution).
  int refine = 1;
  /// Covariate nodes; 0 picks 32 for m <= 2, 16 for m = 3 and 8 beyond.
  int covariate_order = 0;
  /// Cumulative-hazard level of the evaluation horizon used by AstarA_inv
  /// and the head/tail comparison of apply_R. Round-off in AstarA_inv grows
  /// like e^{eta_min x}, so 0 selects min(8, 18 / eta_min, time_max).
  double horizon = 0.0;
};

class QuadratureScheme {
 public:
  QuadratureScheme(const ModelConfig& config, const SchemeOptions& options = {});

  // Time grid.
  [[nodiscard]] std::size_t time_size() const { return d_->x.size(); }
  [[nodiscard]] const std::vector<double>& time_nodes() const { return d_->x; }
  [[nodiscard]] const std::vector<double>& time_weights() const { return d_->w; }
  /// e^{-x_k}.
  [[nodiscard]] const std::vector<double>& decay() const { return d_->decay; }
  /// Failure times t_k = G^{-1}(e^{-x_k}).
  [[nodiscard]] const std::vector<double>& time_points() const { return d_->t; }
  [[nodiscard]] bool in_horizon(std::size_t k) const { return d_->x[k] <= d_->horizon; }
  [[nodiscard]] double horizon() const { return d_->horizon; }

  /// Partial integrals int_0^{x_k} f and int_{x_k}^{X} f from node values.
  [[nodiscard]] std::vector<double> head_integral(const std::vector<double>& f) const;
  [[nodiscard]] std::vector<double> tail_integral(const std::vector<double>& f) const;
  [[nodiscard]] double time_integral(const std::vector<double>& f) const;

  // Covariate grid, with weights that integrate against h.
  [[nodiscard]] std::size_t covariate_size() const { return d_->z.size(); }
  [[nodiscard]] const std::vector<double>& covariate_nodes() const { return d_->z; }
  [[nodiscard]] const std::vector<double>& covariate_weights() const { return d_->wz; }
  [[nodiscard]] double mean_z() const { return d_->mean_z; }
  [[nodiscard]] double var_z() const { return d_->var_z; }

  // Collapsed sigma grid: per eta block, [time][tuple].
  [[nodiscard]] int m() const { return d_->m; }
  [[nodiscard]] const std::vector<int>& etas() const { return d_->etas; }
  [[nodiscard]] const std::vector<double>& eta_probabilities() const { return d_->probs; }
  [[nodiscard]] std::size_t tuple_count() const { return d_->tuple_w.size(); }
  [[nodiscard]] std::size_t block_size() const { return time_size() * tuple_count(); }
  [[nodiscard]] std::size_t sigma_size() const { return d_->etas.size() * block_size(); }
  /// Product of covariate weights over the slots of a tuple.
  [[nodiscard]] const std::vector<double>& tuple_weights() const { return d_->tuple_w; }
  /// Covariate node index held by `slot` of `tuple`.
  [[nodiscard]] std::size_t slot_node(std::size_t tuple, int slot) const;
  /// p(eta) eta w_k e^{-eta x_k}: the sigma weight of row (block e, time k)
  /// before the tuple weight.
  [[nodiscard]] double row_weight(std::size_t e, std::size_t k) const { return d_->row_w[e * time_size() + k]; }
  /// M0(t) / G(t) = E[eta G(t)^{eta-1}] at each time node.
  [[nodiscard]] const std::vector<double>& m0_over_survival() const { return d_->m0g; }

  [[nodiscard]] const SchemeOptions& options() const { return d_->options; }
  [[nodiscard]] const ModelConfig& config() const { return d_->config; }

  friend bool operator==(const QuadratureScheme& a, const QuadratureScheme& b) { return a.d_ == b.d_; }

 private:
  struct Data {
    ModelConfig config;
    SchemeOptions options;
    double horizon = 0.0;
    std::vector<double> x, w, decay, t;
    std::vector<double> panel_lo, panel_half;  // per panel
    std::vector<double> S;                     // panel integration matrix on [-1, 1]
    std::vector<double> ref_w;                 // reference weights on [-1, 1]
    std::vector<double> z, wz;
    double mean_z = 0.0, var_z = 0.0;
    int m = 0;
    std::vector<int> etas;
    std::vector<double> probs;
    std::vector<double> tuple_w;
    std::vector<double> row_w;
    std::vector<double> m0g;
  };
  std::shared_ptr<const Data> d_;
};

struct TimeFunction {
  QuadratureScheme scheme;
  std::vector<double> coef;

  /// alpha(t_k) = a(x_k) g(t_k)^{1/2}.
  [[nodiscard]] double value(std::size_t k) const;
};

struct CovariateFunction {
  QuadratureScheme scheme;
  std::vector<double> coef;

  /// beta(z_l) = b(z_l) h(z_l)^{1/2}.
  [[nodiscard]] double value(std::size_t l) const;
};

struct SigmaFunction {
  QuadratureScheme scheme;
  std::vector<double> coef;

  [[nodiscard]] std::size_t index(std::size_t e, std::size_t k, std::size_t tuple) const {
    return e * scheme.block_size() + k * scheme.tuple_count() + tuple;
  }
};

TimeFunction zero_time_function(const QuadratureScheme& scheme);
CovariateFunction zero_covariate_function(const QuadratureScheme& scheme);
SigmaFunction zero_sigma_function(const QuadratureScheme& scheme);

/// <alpha1, alpha2> in L2(dt), <beta1, beta2> in L2(dz), <mu1, mu2> in L2(sigma).
double time_inner(const TimeFunction& a, const TimeFunction& b);
double covariate_inner(const CovariateFunction& a, const CovariateFunction& b);
double sigma_inner(const SigmaFunction& a, const SigmaFunction& b, Exec exec = Exec::parallel);
double time_norm(const TimeFunction& a);
double covariate_norm(const CovariateFunction& a);
double sigma_norm(const SigmaFunction& a, Exec exec = Exec::parallel);

/// Constraint residuals <alpha, g^{1/2}> and <beta, h^{1/2}>.
double admissibility_defect(const TimeFunction& a);
double admissibility_defect(const CovariateFunction& b);

inline constexpr double kAdmissibleTolerance = 1e-8;
inline constexpr double kProjectableTolerance = 1e-4;

/// Returns the input if its defect is within kAdmissibleTolerance, the
/// projection onto the constraint if within kProjectableTolerance, and
/// throws std::invalid_argument otherwise (tolerances scale with the norm).
TimeFunction make_admissible(const TimeFunction& a);
CovariateFunction make_admissible(const CovariateFunction& b);

SigmaFunction score_rho0(const QuadratureScheme& scheme, Exec exec = Exec::parallel);
SigmaFunction apply_A(const TimeFunction& alpha, Exec exec = Exec::parallel);
SigmaFunction apply_B(const CovariateFunction& beta, Exec exec = Exec::parallel);
TimeFunction adjoint_A(const SigmaFunction& mu, Exec exec = Exec::parallel);
CovariateFunction adjoint_B(const SigmaFunction& mu, Exec exec = Exec::parallel);

enum class RForm { head, tail };

/// g^{-1/2} alpha + (int_0^t g^{1/2} alpha) / G(t); the tail form uses
/// -(int_t^inf g^{1/2} alpha) / G(t) instead.
TimeFunction apply_R(const TimeFunction& alpha, RForm form = RForm::head);

/// A*A alpha = [R alpha (M0/G) - int_0^t R alpha (M0/G) dG/G] g^{1/2}.
TimeFunction AstarA(const TimeFunction& alpha);
/// Inverse of AstarA with M0/G replaced by G/M0. Values are computed on the
/// horizon nodes and set to zero beyond.
TimeFunction AstarA_inv(const TimeFunction& alpha);

/// (EZ/2)[1 + log G(t)] g^{1/2}(t).
TimeFunction alpha_hat(const QuadratureScheme& scheme);
/// (1/2) E[(eta - m)/(m eta)] (z - EZ) h^{1/2}(z).
CovariateFunction beta_hat(const QuadratureScheme& scheme);

/// rho0 - A alpha_hat - B beta_hat.
SigmaFunction projection_residual(const QuadratureScheme& scheme, Exec exec = Exec::parallel);

/// 4 ||rho0 - A alpha_hat - B beta_hat||^2. Requires every eta >= 3.
double information_by_quadrature(const QuadratureScheme& scheme, Exec exec = Exec::parallel);

/// ||(f_eps^{1/2} - f0^{1/2}) / eps - (tau rho0 + A alpha + B beta)||_sigma for
/// the path theta = eps tau, g^{1/2} + eps alpha, h^{1/2} + eps beta (each
/// density renormalized). Throws std::domain_error if a perturbed root
/// density turns negative on the grid.
double hellinger_direction_check(double tau, const TimeFunction& alpha, const CovariateFunction& beta, double eps);

/// Random admissible unit-norm directions: polynomials in G(t) (resp. in
/// standardized z) of the given degree, projected onto the constraint.
TimeFunction random_time_direction(const QuadratureScheme& scheme, RngStream& rng, int degree = 3);
CovariateFunction random_covariate_direction(const QuadratureScheme& scheme, RngStream& rng, int degree = 2);
/// Random smooth unit-norm element of L2(sigma).
SigmaFunction random_sigma_function(const QuadratureScheme& scheme, RngStream& rng);

}  // namespace ncc
