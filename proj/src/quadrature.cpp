#include "ncc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ncc::quadrature {
namespace {

// Golub–Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix of
// the orthogonal-polynomial recurrence, weights are mu0 * (first eigenvector
// component)^2.
Rule golub_welsch(int n, const std::vector<double>& offdiag, double mu0) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k + 1 < n; ++k) {
    jacobi(k, k + 1) = offdiag[static_cast<std::size_t>(k)];
    jacobi(k + 1, k) = offdiag[static_cast<std::size_t>(k)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("quadrature: Jacobi eigen-decomposition failed");
  }
  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double v0 = solver.eigenvectors()(0, k);
    rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()(k);
    rule.weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
  }
  return rule;
}

void symmetrize(Rule& rule) {
  const std::size_t n = rule.size();
  for (std::size_t k = 0; k < n / 2; ++k) {
    const std::size_t j = n - 1 - k;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
    rule.nodes[k] = -x;
    rule.nodes[j] = x;
    rule.weights[k] = w;
    rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
}

}  // namespace

double legendre_p(int n, double x) {
  if (n == 0) return 1.0;
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

namespace {

Rule compute_legendre(int n) {
  std::vector<double> offdiag(static_cast<std::size_t>(std::max(n - 1, 0)));
  for (int k = 1; k < n; ++k) {
    offdiag[static_cast<std::size_t>(k - 1)] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  Rule rule = golub_welsch(n, offdiag, 2.0);
  symmetrize(rule);

  // One Newton polish per node, then weights from the derivative formula;
  // this recovers full relative accuracy in the weights.
  for (std::size_t k = 0; k < rule.size(); ++k) {
    double x = rule.nodes[k];
    for (int it = 0; it < 2; ++it) {
      const double p = legendre_p(n, x);
      const double pm = legendre_p(n - 1, x);
      const double dp = n * (x * p - pm) / (x * x - 1.0);
      x -= p / dp;
    }
    const double pm = legendre_p(n - 1, x);
    const double dp = n * (x * legendre_p(n, x) - pm) / (x * x - 1.0);
    rule.nodes[k] = x;
    rule.weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  symmetrize(rule);
  return rule;
}

Rule compute_hermite(int n) {
  // Probabilists' Hermite recurrence: He_{k+1} = x He_k - k He_{k-1}.
  std::vector<double> offdiag(static_cast<std::size_t>(std::max(n - 1, 0)));
  for (int k = 1; k < n; ++k) offdiag[static_cast<std::size_t>(k - 1)] = std::sqrt(static_cast<double>(k));
  Rule rule = golub_welsch(n, offdiag, 1.0);
  symmetrize(rule);
  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  return rule;
}

// One cache per family, keyed by order; callers get a copy.
Rule cached(std::map<int, Rule>& cache, int n, Rule (*compute)(int)) {
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute(n)).first;
  return it->second;
}

}  // namespace

Rule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  static std::map<int, Rule> cache;
  return cached(cache, n, compute_legendre);
}

Rule gauss_legendre(int n, double a, double b) {
  Rule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    rule.nodes[k] = mid + half * rule.nodes[k];
    rule.weights[k] *= half;
  }
  return rule;
}

Rule gauss_hermite_normal(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_normal: n must be >= 1");
  static std::map<int, Rule> cache;
  return cached(cache, n, compute_hermite);
}

std::vector<double> legendre_integration_matrix(const Rule& rule) {
  const int n = static_cast<int>(rule.size());
  std::vector<double> s(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  // Lagrange basis l_j = sum_p w_j P_p(x_j) (2p+1)/2 P_p, exact for p < n.
  // Integral of P_0 from -1 is x + 1; of P_p (p >= 1) is (P_{p+1} - P_{p-1})/(2p+1).
  std::vector<double> pj(static_cast<std::size_t>(n + 1));
  std::vector<double> pk(static_cast<std::size_t>(n + 1));
  for (int k = 0; k < n; ++k) {
    const double xk = rule.nodes[static_cast<std::size_t>(k)];
    for (int p = 0; p <= n; ++p) pk[static_cast<std::size_t>(p)] = legendre_p(p, xk);
    for (int j = 0; j < n; ++j) {
      const double xj = rule.nodes[static_cast<std::size_t>(j)];
      for (int p = 0; p < n; ++p) pj[static_cast<std::size_t>(p)] = legendre_p(p, xj);
      double acc = 0.5 * (xk + 1.0);
      for (int p = 1; p < n; ++p) {
        acc += 0.5 * pj[static_cast<std::size_t>(p)] *
               (pk[static_cast<std::size_t>(p + 1)] - pk[static_cast<std::size_t>(p - 1)]);
      }
      s[static_cast<std::size_t>(k * n + j)] = rule.weights[static_cast<std::size_t>(j)] * acc;
    }
  }
  return s;
}

}  // namespace ncc::quadrature
