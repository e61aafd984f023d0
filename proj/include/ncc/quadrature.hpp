#pragma once

#include <vector>

namespace ncc::quadrature {

/// Nodes and weights of a fixed quadrature rule.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss–Legendre rule on [-1, 1].
Rule gauss_legendre(int n);

/// n-point Gauss–Legendre rule mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

/// n-point Gauss–Hermite rule for the standard normal weight, i.e.
/// sum_k w_k f(z_k) ~ E f(Z) with Z ~ N(0, 1).
Rule gauss_hermite_normal(int n);

/// Spectral integration matrix on the Gauss–Legendre nodes of `rule`
/// (a rule on [-1, 1]): S(k, j) = integral from -1 to x_k of the j-th
/// Lagrange basis polynomial. Row-major, n x n.
///
/// Satisfies the discrete summation-by-parts identity
///   w^T (F * S G) + w^T (G * S F) = (w^T F)(w^T G)
/// exactly for any node values F, G.
std::vector<double> legendre_integration_matrix(const Rule& rule);

/// Legendre polynomial P_n(x) via the three-term recurrence.
double legendre_p(int n, double x);

}  // namespace ncc::quadrature
