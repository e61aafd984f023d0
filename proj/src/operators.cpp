#include "ncc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ncc/quadrature.hpp"

namespace ncc {
namespace {

struct Panel {
  double lo, hi, width;
};

// Panel widths by region of x; the integrands decay like e^{-eta x}.
std::vector<Panel> time_panels(double time_max, int refine) {
  const Panel regions[] = {{0.0, 8.0, 0.5}, {8.0, 20.0, 1.0}, {20.0, 1e300, 4.0}};
  std::vector<Panel> out;
  for (const auto& r : regions) {
    const double hi = std::min(r.hi, time_max);
    if (hi <= r.lo) break;
    const int count = std::max(1, static_cast<int>(std::ceil((hi - r.lo) / r.width - 1e-9))) * refine;
    const double width = (hi - r.lo) / count;
    for (int p = 0; p < count; ++p) out.push_back({r.lo + p * width, r.lo + (p + 1) * width, width});
  }
  return out;
}

void require_same(const QuadratureScheme& a, const QuadratureScheme& b) {
  if (!(a == b)) throw std::invalid_argument("operands were built on different quadrature schemes");
}

double hermite_he(int n, double x) {
  double p0 = 1.0;
  if (n == 0) return p0;
  double p1 = x;
  for (int k = 1; k < n; ++k) {
    const double p2 = x * p1 - k * p0;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scheme

QuadratureScheme::QuadratureScheme(const ModelConfig& config, const SchemeOptions& options) {
  if (options.panel_order < 2) throw std::invalid_argument("QuadratureScheme: panel_order < 2");
  if (options.refine < 1) throw std::invalid_argument("QuadratureScheme: refine < 1");
  if (!(options.time_max > 0.0)) throw std::invalid_argument("QuadratureScheme: time_max must be positive");
  if (config.m < 1 || config.m > config.group_size.min_size()) {
    throw ConfigError("QuadratureScheme: need 1 <= m <= every group size");
  }
  const double horizon =
      options.horizon > 0.0 ? options.horizon
                            : std::min({8.0, 18.0 / config.group_size.min_size(), options.time_max});
  if (!(horizon <= options.time_max) || options.horizon < 0.0) {
    throw std::domain_error("QuadratureScheme: horizon must lie inside the time grid");
  }

  auto d = std::make_shared<Data>();
  d->config = config;
  d->options = options;
  d->horizon = horizon;

  const auto ref = quadrature::gauss_legendre(options.panel_order);
  d->ref_w = ref.weights;
  d->S = quadrature::legendre_integration_matrix(ref);
  for (const auto& p : time_panels(options.time_max, options.refine)) {
    const double half = 0.5 * p.width;
    d->panel_lo.push_back(p.lo);
    d->panel_half.push_back(half);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      const double x = p.lo + half * (ref.nodes[k] + 1.0);
      d->x.push_back(x);
      d->w.push_back(half * ref.weights[k]);
      d->decay.push_back(std::exp(-x));
      d->t.push_back(config.baseline.inverse_cumulative_hazard(x));
    }
  }

  int order = options.covariate_order;
  if (order == 0) order = config.m <= 2 ? 32 : (config.m == 3 ? 16 : 8);
  const auto cov = config.covariate.quadrature(order);
  d->z = cov.nodes;
  d->wz = cov.weights;
  d->mean_z = config.covariate.mean();
  d->var_z = config.covariate.variance();

  d->m = config.m;
  d->etas = config.group_size.support();
  d->probs = config.group_size.probabilities();

  std::size_t tuples = 1;
  for (int s = 0; s < d->m; ++s) tuples *= d->z.size();
  d->tuple_w.assign(tuples, 1.0);
  for (std::size_t tu = 0; tu < tuples; ++tu) {
    std::size_t rest = tu;
    for (int s = 0; s < d->m; ++s) {
      d->tuple_w[tu] *= d->wz[rest % d->z.size()];
      rest /= d->z.size();
    }
  }

  const std::size_t nt = d->x.size();
  d->row_w.resize(d->etas.size() * nt);
  for (std::size_t e = 0; e < d->etas.size(); ++e) {
    const int eta = d->etas[e];
    for (std::size_t k = 0; k < nt; ++k) d->row_w[e * nt + k] = d->probs[e] * eta * d->w[k] * std::exp(-eta * d->x[k]);
  }
  d->m0g.assign(nt, 0.0);
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t e = 0; e < d->etas.size(); ++e) {
      d->m0g[k] += d->probs[e] * d->etas[e] * std::exp(-(d->etas[e] - 1) * d->x[k]);
    }
  }
  d_ = std::move(d);
}

std::size_t QuadratureScheme::slot_node(std::size_t tuple, int slot) const {
  const std::size_t n = d_->z.size();
  for (int s = 0; s < slot; ++s) tuple /= n;
  return tuple % n;
}

std::vector<double> QuadratureScheme::head_integral(const std::vector<double>& f) const {
  if (f.size() != time_size()) throw std::invalid_argument("head_integral: size mismatch");
  const std::size_t n = d_->ref_w.size();
  std::vector<double> out(f.size());
  double running = 0.0;
  for (std::size_t p = 0; p < d_->panel_lo.size(); ++p) {
    const double* fp = &f[p * n];
    const double half = d_->panel_half[p];
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += d_->ref_w[j] * fp[j];
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += d_->S[k * n + j] * fp[j];
      out[p * n + k] = running + half * acc;
    }
    running += half * total;
  }
  return out;
}

std::vector<double> QuadratureScheme::tail_integral(const std::vector<double>& f) const {
  if (f.size() != time_size()) throw std::invalid_argument("tail_integral: size mismatch");
  const std::size_t n = d_->ref_w.size();
  std::vector<double> out(f.size());
  // Right to left, so small tails keep their relative accuracy.
  double running = 0.0;
  for (std::size_t p = d_->panel_lo.size(); p-- > 0;) {
    const double* fp = &f[p * n];
    const double half = d_->panel_half[p];
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += d_->ref_w[j] * fp[j];
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += (d_->ref_w[j] - d_->S[k * n + j]) * fp[j];
      out[p * n + k] = running + half * acc;
    }
    running += half * total;
  }
  return out;
}

double QuadratureScheme::time_integral(const std::vector<double>& f) const {
  if (f.size() != time_size()) throw std::invalid_argument("time_integral: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) acc += d_->w[k] * f[k];
  return acc;
}

// ---------------------------------------------------------------------------
// Function types

double TimeFunction::value(std::size_t k) const {
  const auto& cfg = scheme.config();
  return coef.at(k) * std::sqrt(cfg.baseline.density(scheme.time_points()[k]));
}

double CovariateFunction::value(std::size_t l) const {
  return coef.at(l) * std::sqrt(scheme.config().covariate.density(scheme.covariate_nodes()[l]));
}

TimeFunction zero_time_function(const QuadratureScheme& s) { return {s, std::vector<double>(s.time_size(), 0.0)}; }
CovariateFunction zero_covariate_function(const QuadratureScheme& s) {
  return {s, std::vector<double>(s.covariate_size(), 0.0)};
}
SigmaFunction zero_sigma_function(const QuadratureScheme& s) { return {s, std::vector<double>(s.sigma_size(), 0.0)}; }

double time_inner(const TimeFunction& a, const TimeFunction& b) {
  require_same(a.scheme, b.scheme);
  const auto& w = a.scheme.time_weights();
  const auto& dec = a.scheme.decay();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * dec[k] * a.coef[k] * b.coef[k];
  return acc;
}

double covariate_inner(const CovariateFunction& a, const CovariateFunction& b) {
  require_same(a.scheme, b.scheme);
  const auto& w = a.scheme.covariate_weights();
  double acc = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) acc += w[l] * a.coef[l] * b.coef[l];
  return acc;
}

double sigma_inner(const SigmaFunction& a, const SigmaFunction& b, Exec exec) {
  require_same(a.scheme, b.scheme);
  const auto& s = a.scheme;
  const std::size_t nt = s.time_size();
  const std::size_t nu = s.tuple_count();
  const auto& tw = s.tuple_weights();
  const std::size_t rows = s.etas().size() * nt;
  if (exec == Exec::serial) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double rw = s.row_weight(r / nt, r % nt);
      for (std::size_t u = 0; u < nu; ++u) acc += rw * tw[u] * a.coef[r * nu + u] * b.coef[r * nu + u];
    }
    return acc;
  }
  std::vector<double> partial(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
    const std::size_t row = static_cast<std::size_t>(r);
    const double* pa = &a.coef[row * nu];
    const double* pb = &b.coef[row * nu];
    double acc = 0.0;
    for (std::size_t u = 0; u < nu; ++u) acc += tw[u] * pa[u] * pb[u];
    partial[row] = s.row_weight(row / nt, row % nt) * acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double time_norm(const TimeFunction& a) { return std::sqrt(time_inner(a, a)); }
double covariate_norm(const CovariateFunction& a) { return std::sqrt(covariate_inner(a, a)); }
double sigma_norm(const SigmaFunction& a, Exec exec) { return std::sqrt(sigma_inner(a, a, exec)); }

double admissibility_defect(const TimeFunction& a) {
  const auto& w = a.scheme.time_weights();
  const auto& dec = a.scheme.decay();
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * dec[k] * a.coef[k];
  return acc;
}

double admissibility_defect(const CovariateFunction& b) {
  const auto& w = b.scheme.covariate_weights();
  double acc = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) acc += w[l] * b.coef[l];
  return acc;
}

TimeFunction make_admissible(const TimeFunction& a) {
  const double defect = admissibility_defect(a);
  const double scale = std::max(1.0, time_norm(a));
  if (std::abs(defect) <= kAdmissibleTolerance * scale) return a;
  if (std::abs(defect) > kProjectableTolerance * scale) {
    throw std::invalid_argument("time direction violates the orthogonality constraint");
  }
  // g^{1/2} has coefficient 1 and norm^2 sum w e^{-x}.
  const double unit = a.scheme.time_integral(a.scheme.decay());
  TimeFunction out = a;
  for (double& c : out.coef) c -= defect / unit;
  return out;
}

CovariateFunction make_admissible(const CovariateFunction& b) {
  const double defect = admissibility_defect(b);
  const double scale = std::max(1.0, covariate_norm(b));
  if (std::abs(defect) <= kAdmissibleTolerance * scale) return b;
  if (std::abs(defect) > kProjectableTolerance * scale) {
    throw std::invalid_argument("covariate direction violates the orthogonality constraint");
  }
  double unit = 0.0;
  for (double w : b.scheme.covariate_weights()) unit += w;
  CovariateFunction out = b;
  for (double& c : out.coef) c -= defect / unit;
  return out;
}

// ---------------------------------------------------------------------------
// Operators

namespace {

// Fills coef[(e, k, tuple)] = f(e, k, tuple), rows in parallel.
template <class F>
void fill_sigma(SigmaFunction& mu, Exec exec, F&& f) {
  const auto& s = mu.scheme;
  const std::size_t nt = s.time_size();
  const std::size_t nu = s.tuple_count();
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(s.etas().size() * nt);
  auto row = [&](std::size_t r) {
    const std::size_t e = r / nt;
    const std::size_t k = r % nt;
    double* out = &mu.coef[r * nu];
    for (std::size_t u = 0; u < nu; ++u) out[u] = f(e, k, u);
  };
  if (exec == Exec::serial) {
    for (std::ptrdiff_t r = 0; r < rows; ++r) row(static_cast<std::size_t>(r));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) row(static_cast<std::size_t>(r));
  }
}

void require_admissible(const TimeFunction& a) {
  if (std::abs(admissibility_defect(a)) > kAdmissibleTolerance * std::max(1.0, time_norm(a))) {
    throw std::invalid_argument("apply_A: alpha is not orthogonal to g^{1/2}");
  }
}

void require_admissible(const CovariateFunction& b) {
  if (std::abs(admissibility_defect(b)) > kAdmissibleTolerance * std::max(1.0, covariate_norm(b))) {
    throw std::invalid_argument("apply_B: beta is not orthogonal to h^{1/2}");
  }
}

// e^{x} int_x^X a(y) e^{-y} dy.
std::vector<double> scaled_tail(const TimeFunction& a) {
  const auto& s = a.scheme;
  std::vector<double> f(s.time_size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = a.coef[k] * s.decay()[k];
  auto tail = s.tail_integral(f);
  for (std::size_t k = 0; k < f.size(); ++k) tail[k] /= s.decay()[k];
  return tail;
}

// Per tuple: covariate of slot 0 and sum of (z_s - EZ) over all slots.
void tuple_summaries(const QuadratureScheme& s, std::vector<double>& z0, std::vector<double>& dev) {
  const std::size_t nu = s.tuple_count();
  z0.resize(nu);
  dev.resize(nu);
  for (std::size_t u = 0; u < nu; ++u) {
    z0[u] = s.covariate_nodes()[s.slot_node(u, 0)];
    double acc = 0.0;
    for (int slot = 0; slot < s.m(); ++slot) acc += s.covariate_nodes()[s.slot_node(u, slot)] - s.mean_z();
    dev[u] = acc;
  }
}

}  // namespace

SigmaFunction score_rho0(const QuadratureScheme& s, Exec exec) {
  std::vector<double> z0, dev;
  tuple_summaries(s, z0, dev);
  const double ez = s.mean_z();
  SigmaFunction mu = zero_sigma_function(s);
  fill_sigma(mu, exec, [&](std::size_t e, std::size_t k, std::size_t u) {
    const double x = s.time_nodes()[k];
    return 0.5 * (z0[u] - x * dev[u] - s.etas()[e] * ez * x);
  });
  return mu;
}

SigmaFunction apply_A(const TimeFunction& alpha, Exec exec) {
  require_admissible(alpha);
  const auto& s = alpha.scheme;
  const auto tail = scaled_tail(alpha);
  SigmaFunction mu = zero_sigma_function(s);
  fill_sigma(mu, exec, [&](std::size_t e, std::size_t k, std::size_t) {
    return alpha.coef[k] + (s.etas()[e] - 1) * tail[k];
  });
  return mu;
}

SigmaFunction apply_B(const CovariateFunction& beta, Exec exec) {
  require_admissible(beta);
  const auto& s = beta.scheme;
  std::vector<double> bsum(s.tuple_count(), 0.0);
  for (std::size_t u = 0; u < bsum.size(); ++u) {
    for (int slot = 0; slot < s.m(); ++slot) bsum[u] += beta.coef[s.slot_node(u, slot)];
  }
  SigmaFunction mu = zero_sigma_function(s);
  fill_sigma(mu, exec, [&](std::size_t, std::size_t, std::size_t u) { return bsum[u]; });
  return mu;
}

TimeFunction adjoint_A(const SigmaFunction& mu, Exec exec) {
  const auto& s = mu.scheme;
  const std::size_t nt = s.time_size();
  const std::size_t nu = s.tuple_count();
  const std::size_t ne = s.etas().size();
  const auto& tw = s.tuple_weights();

  // Covariate averages Phi(e, k).
  std::vector<double> phi(ne * nt);
  auto row = [&](std::size_t r) {
    const double* p = &mu.coef[r * nu];
    double acc = 0.0;
    for (std::size_t u = 0; u < nu; ++u) acc += tw[u] * p[u];
    phi[r] = acc;
  };
  if (exec == Exec::serial) {
    for (std::size_t r = 0; r < ne * nt; ++r) row(r);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(ne * nt); ++r) row(static_cast<std::size_t>(r));
  }

  TimeFunction out = zero_time_function(s);
  std::vector<double> f(nt);
  for (std::size_t e = 0; e < ne; ++e) {
    const int eta = s.etas()[e];
    const double c = s.eta_probabilities()[e] * eta;
    for (std::size_t k = 0; k < nt; ++k) f[k] = std::exp(-(eta - 1) * s.time_nodes()[k]) * phi[e * nt + k];
    const auto head = s.head_integral(f);
    for (std::size_t k = 0; k < nt; ++k) out.coef[k] += c * (f[k] + (eta - 1) * head[k]);
  }
  return out;
}

CovariateFunction adjoint_B(const SigmaFunction& mu, Exec exec) {
  const auto& s = mu.scheme;
  const std::size_t nt = s.time_size();
  const std::size_t nu = s.tuple_count();
  const std::size_t ne = s.etas().size();
  const std::size_t nz = s.covariate_size();
  const auto& wz = s.covariate_weights();

  // Time integrals V(e, tuple) = sum_k row_weight(e, k) phi(e, k, tuple).
  std::vector<double> v(ne * nu);
  auto col = [&](std::size_t c) {
    const std::size_t e = c / nu;
    const std::size_t u = c % nu;
    double acc = 0.0;
    for (std::size_t k = 0; k < nt; ++k) acc += s.row_weight(e, k) * mu.coef[mu.index(e, k, u)];
    v[c] = acc;
  };
  if (exec == Exec::serial) {
    for (std::size_t c = 0; c < ne * nu; ++c) col(c);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(ne * nu); ++c) col(static_cast<std::size_t>(c));
  }

  // For node l: sum over slots s and tuples with slot s at l, weighted by the
  // other slots' covariate weights.
  const int m = s.m();
  std::size_t stride_of[16];
  {
    std::size_t st = 1;
    for (int slot = 0; slot < m; ++slot) {
      stride_of[slot] = st;
      st *= nz;
    }
  }
  const std::size_t others = nu / nz;
  CovariateFunction out = zero_covariate_function(s);
  auto node = [&](std::size_t l) {
    double acc = 0.0;
    for (int slot = 0; slot < m; ++slot) {
      for (std::size_t o = 0; o < others; ++o) {
        // Spread o over the slots other than `slot`.
        std::size_t rest = o;
        std::size_t tuple = l * stride_of[slot];
        double w = 1.0;
        for (int q = 0; q < m; ++q) {
          if (q == slot) continue;
          const std::size_t idx = rest % nz;
          rest /= nz;
          tuple += idx * stride_of[q];
          w *= wz[idx];
        }
        for (std::size_t e = 0; e < ne; ++e) acc += w * v[e * nu + tuple];
      }
    }
    out.coef[l] = acc;
  };
  if (m > 16) throw std::invalid_argument("adjoint_B: m > 16 unsupported");
  if (exec == Exec::serial) {
    for (std::size_t l = 0; l < nz; ++l) node(l);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t l = 0; l < static_cast<std::ptrdiff_t>(nz); ++l) node(static_cast<std::size_t>(l));
  }
  return out;
}

TimeFunction apply_R(const TimeFunction& alpha, RForm form) {
  const auto& s = alpha.scheme;
  std::vector<double> f(s.time_size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = alpha.coef[k] * s.decay()[k];
  const auto part = form == RForm::head ? s.head_integral(f) : s.tail_integral(f);
  TimeFunction out = zero_time_function(s);
  const double sign = form == RForm::head ? 1.0 : -1.0;
  for (std::size_t k = 0; k < f.size(); ++k) out.coef[k] = alpha.coef[k] + sign * part[k] / s.decay()[k];
  return out;
}

namespace {

// c = f - int_0^x f dy.
TimeFunction volterra(const QuadratureScheme& s, std::vector<double> f) {
  const auto head = s.head_integral(f);
  TimeFunction out = zero_time_function(s);
  for (std::size_t k = 0; k < f.size(); ++k) out.coef[k] = f[k] - head[k];
  return out;
}

}  // namespace

TimeFunction AstarA(const TimeFunction& alpha) {
  const auto& s = alpha.scheme;
  const auto r = apply_R(alpha, RForm::head);
  std::vector<double> f(s.time_size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = r.coef[k] * s.m0_over_survival()[k];
  return volterra(s, std::move(f));
}

TimeFunction AstarA_inv(const TimeFunction& alpha) {
  const auto& s = alpha.scheme;
  const auto r = apply_R(alpha, RForm::head);
  std::vector<double> f(s.time_size(), 0.0);
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (s.in_horizon(k)) f[k] = r.coef[k] / s.m0_over_survival()[k];
  }
  auto out = volterra(s, std::move(f));
  for (std::size_t k = 0; k < out.coef.size(); ++k) {
    if (!s.in_horizon(k)) out.coef[k] = 0.0;
  }
  return out;
}

TimeFunction alpha_hat(const QuadratureScheme& s) {
  TimeFunction a = zero_time_function(s);
  for (std::size_t k = 0; k < a.coef.size(); ++k) a.coef[k] = 0.5 * s.mean_z() * (1.0 - s.time_nodes()[k]);
  return a;
}

CovariateFunction beta_hat(const QuadratureScheme& s) {
  const int m = s.m();
  double c = 0.0;
  for (std::size_t e = 0; e < s.etas().size(); ++e) {
    const int eta = s.etas()[e];
    c += s.eta_probabilities()[e] * static_cast<double>(eta - m) / (m * eta);
  }
  CovariateFunction b = zero_covariate_function(s);
  for (std::size_t l = 0; l < b.coef.size(); ++l) b.coef[l] = 0.5 * c * (s.covariate_nodes()[l] - s.mean_z());
  return b;
}

SigmaFunction projection_residual(const QuadratureScheme& s, Exec exec) {
  SigmaFunction rho = score_rho0(s, exec);
  const SigmaFunction a = apply_A(alpha_hat(s), exec);
  const SigmaFunction b = apply_B(beta_hat(s), exec);
  for (std::size_t i = 0; i < rho.coef.size(); ++i) rho.coef[i] -= a.coef[i] + b.coef[i];
  return rho;
}

double information_by_quadrature(const QuadratureScheme& s, Exec exec) {
  if (s.etas().front() < 3) throw std::domain_error("information_by_quadrature: requires every group size >= 3");
  const SigmaFunction r = projection_residual(s, exec);
  return 4.0 * sigma_inner(r, r, exec);
}

// ---------------------------------------------------------------------------
// Hellinger differentiability

double hellinger_direction_check(double tau, const TimeFunction& alpha, const CovariateFunction& beta, double eps) {
  require_same(alpha.scheme, beta.scheme);
  if (!(eps > 0.0)) throw std::invalid_argument("hellinger_direction_check: eps must be positive");
  require_admissible(alpha);
  require_admissible(beta);
  const auto& s = alpha.scheme;
  const std::size_t nt = s.time_size();
  const std::size_t nz = s.covariate_size();
  const int m = s.m();
  const auto& x = s.time_nodes();
  const auto& z = s.covariate_nodes();
  const auto& wz = s.covariate_weights();

  for (double a : alpha.coef) {
    if (1.0 + eps * a < 0.0) throw std::domain_error("hellinger_direction_check: eps too large for alpha");
  }
  for (double b : beta.coef) {
    if (1.0 + eps * b < 0.0) throw std::domain_error("hellinger_direction_check: eps too large for beta");
  }

  const double theta = eps * tau;

  // Baseline: N = int (1 + eps a)^2 e^{-y}, and
  // log(G_eps / G) = log1p(e^x int_x (2 eps a + eps^2 a^2) e^{-y}) - log N.
  std::vector<double> f(nt);
  for (std::size_t k = 0; k < nt; ++k) f[k] = (1.0 + eps * alpha.coef[k]) * (1.0 + eps * alpha.coef[k]) * s.decay()[k];
  const double norm_g = s.time_integral(f);
  for (std::size_t k = 0; k < nt; ++k) {
    f[k] = (2.0 * eps * alpha.coef[k] + eps * eps * alpha.coef[k] * alpha.coef[k]) * s.decay()[k];
  }
  const auto tail = s.tail_integral(f);
  std::vector<double> log_ratio_g(nt);
  std::vector<double> log_g(nt);  // log G_eps
  for (std::size_t k = 0; k < nt; ++k) {
    log_ratio_g[k] = std::log1p(tail[k] / s.decay()[k]) - std::log(norm_g);
    log_g[k] = -x[k] + log_ratio_g[k];
  }

  // Covariates: h_eps / h = (1 + eps b)^2 / N_h.
  double norm_h = 0.0;
  for (std::size_t l = 0; l < nz; ++l) norm_h += wz[l] * (1.0 + eps * beta.coef[l]) * (1.0 + eps * beta.coef[l]);
  std::vector<double> log_ratio_h(nz);
  std::vector<double> tilt(nz);  // e^{theta z} - 1
  for (std::size_t l = 0; l < nz; ++l) {
    log_ratio_h[l] = 2.0 * std::log1p(eps * beta.coef[l]) - std::log(norm_h);
    tilt[l] = std::expm1(theta * z[l]);
  }

  // log of the mixture survival relative to G_eps.
  std::vector<double> log_mix(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    double acc = 0.0;
    for (std::size_t l = 0; l < nz; ++l) acc += wz[l] * std::exp(log_ratio_h[l] + tilt[l] * log_g[k]);
    log_mix[k] = std::log(acc);
  }

  const SigmaFunction rho = score_rho0(s, Exec::parallel);
  const SigmaFunction da = apply_A(alpha, Exec::parallel);
  const SigmaFunction db = apply_B(beta, Exec::parallel);

  SigmaFunction resid = zero_sigma_function(s);
  fill_sigma(resid, Exec::parallel, [&](std::size_t e, std::size_t k, std::size_t u) {
    const int eta = s.etas()[e];
    double lr = 2.0 * std::log1p(eps * alpha.coef[k]) - std::log(norm_g);
    lr += (eta - 1) * log_ratio_g[k] + (eta - m) * log_mix[k];
    for (int slot = 0; slot < m; ++slot) {
      const std::size_t l = s.slot_node(u, slot);
      lr += tilt[l] * log_g[k] + log_ratio_h[l];
    }
    lr += theta * z[s.slot_node(u, 0)];
    const std::size_t i = resid.index(e, k, u);
    return std::expm1(0.5 * lr) / eps - (tau * rho.coef[i] + da.coef[i] + db.coef[i]);
  });
  return sigma_norm(resid);
}

// ---------------------------------------------------------------------------
// Random directions

TimeFunction random_time_direction(const QuadratureScheme& s, RngStream& rng, int degree) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  for (double& v : c) v = rng.normal();
  TimeFunction a = zero_time_function(s);
  for (std::size_t k = 0; k < a.coef.size(); ++k) {
    const double g = s.decay()[k];
    double acc = 0.0;
    for (std::size_t p = c.size(); p-- > 0;) acc = acc * g + c[p];
    a.coef[k] = acc;
  }
  const double unit = s.time_integral(s.decay());
  const double defect = admissibility_defect(a);
  for (double& v : a.coef) v -= defect / unit;
  const double nrm = time_norm(a);
  for (double& v : a.coef) v /= nrm;
  return a;
}

CovariateFunction random_covariate_direction(const QuadratureScheme& s, RngStream& rng, int degree) {
  std::vector<double> c(static_cast<std::size_t>(degree) + 1);
  for (double& v : c) v = rng.normal();
  const double sd = std::sqrt(s.var_z());
  CovariateFunction b = zero_covariate_function(s);
  for (std::size_t l = 0; l < b.coef.size(); ++l) {
    const double u = (s.covariate_nodes()[l] - s.mean_z()) / sd;
    double acc = 0.0;
    for (std::size_t p = 0; p < c.size(); ++p) acc += c[p] * hermite_he(static_cast<int>(p), u);
    b.coef[l] = acc;
  }
  double unit = 0.0;
  for (double w : s.covariate_weights()) unit += w;
  const double defect = admissibility_defect(b);
  for (double& v : b.coef) v -= defect / unit;
  const double nrm = covariate_norm(b);
  for (double& v : b.coef) v /= nrm;
  return b;
}

SigmaFunction random_sigma_function(const QuadratureScheme& s, RngStream& rng) {
  const int m = s.m();
  const std::size_t ne = s.etas().size();
  // phi = u_0(x) + sum_slot zt_slot u_{slot+1}(x) + zt_0 zt_1 u_{m+1}(x), where
  // zt is the standardized covariate and each u_j(x) = c0 + c1 e^{-x} + c2 x e^{-x/2}.
  const std::size_t terms = static_cast<std::size_t>(m) + 2;
  std::vector<double> c(ne * terms * 3);
  for (double& v : c) v = rng.normal();
  const double sd = std::sqrt(s.var_z());
  std::vector<double> zt(s.covariate_size());
  for (std::size_t l = 0; l < zt.size(); ++l) zt[l] = (s.covariate_nodes()[l] - s.mean_z()) / sd;

  SigmaFunction mu = zero_sigma_function(s);
  fill_sigma(mu, Exec::serial, [&](std::size_t e, std::size_t k, std::size_t u) {
    const double x = s.time_nodes()[k];
    const double b1 = std::exp(-x);
    const double b2 = x * std::exp(-0.5 * x);
    auto poly = [&](std::size_t j) {
      const double* cj = &c[(e * terms + j) * 3];
      return cj[0] + cj[1] * b1 + cj[2] * b2;
    };
    double v = poly(0);
    for (int slot = 0; slot < m; ++slot) v += zt[s.slot_node(u, slot)] * poly(static_cast<std::size_t>(slot) + 1);
    if (m >= 2) v += zt[s.slot_node(u, 0)] * zt[s.slot_node(u, 1)] * poly(static_cast<std::size_t>(m) + 1);
    return v;
  });
  const double nrm = sigma_norm(mu);
  for (double& v : mu.coef) v /= nrm;
  return mu;
}

}  // namespace ncc
