#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "ncc/bounds.hpp"
#include "ncc/rng.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace ncc;

namespace {

BoundsInput input_of(GroupSizeDistribution eta, int m, double var_z = 1.0, double mean_z = 0.0,
                     Baseline b = Baseline::exponential()) {
  BoundsInput in;
  in.group_size = std::move(eta);
  in.m = m;
  in.var_z = var_z;
  in.mean_z = mean_z;
  in.baseline = b;
  return in;
}

ModelConfig config_of(const BoundsInput& in) {
  ModelConfig c;
  c.group_size = in.group_size;
  c.m = in.m;
  c.baseline = in.baseline;
  return c;
}

GroupSizeDistribution random_pmf(RngStream& rng) {
  std::vector<std::pair<int, double>> pmf;
  double total = 0.0;
  for (int eta = 2; eta <= 9; ++eta) {
    if (rng.uniform_open() < 0.5) continue;
    const double p = rng.uniform_open();
    pmf.emplace_back(eta, p);
    total += p;
  }
  if (pmf.empty()) return GroupSizeDistribution::degenerate(4);
  for (auto& [eta, p] : pmf) p /= total;
  return GroupSizeDistribution(pmf);
}

}  // namespace

TEST_CASE("order statistic moment integral", "[bounds]") {
  CHECK_THAT(lemma43_integral(5, 1, 1), WithinAbs(-0.04, 1e-16));
  CHECK_THAT(lemma43_integral(4, 2, 2), WithinAbs(2.0 / 27, 1e-16));
  for (int eta = 2; eta <= 8; ++eta) {
    CHECK_THAT(lemma43_integral(eta, 1, 0), WithinAbs(1.0 / eta, 1e-16));
  }
  CHECK_THAT(oracle::lemma43_by_quadrature(Baseline::exponential(), 5, 1, 1), WithinAbs(-0.04, 1e-10));
  for (const Baseline& b : {Baseline::exponential(), Baseline::weibull(2.5)}) {
    for (int eta = 3; eta <= 8; eta += 5) {
      for (int j = 0; j <= 3; ++j) {
        CHECK_THAT(lemma43_integral(eta, 3, j), WithinAbs(oracle::lemma43_by_quadrature(b, eta, 3, j), 1e-8));
      }
    }
  }
  CHECK_THROWS_AS(lemma43_integral(2, 3, 0), std::domain_error);
}

TEST_CASE("effective information", "[bounds]") {
  CHECK_THAT(effective_information(input_of(GroupSizeDistribution::degenerate(5), 2)), WithinAbs(0.58, 1e-15));
  const double v = (0.25 - 1.0 / 6) * (0.25 - 1.0 / 6) / 4;
  const double want = 0.5 + 2 * (2 * v + (5.0 / 24) * (5.0 / 24));
  CHECK_THAT(effective_information(input_of(GroupSizeDistribution({{4, 0.5}, {6, 0.5}}), 2)), WithinAbs(want, 1e-15));
  CHECK_THAT(want, WithinAbs(0.59375, 1e-15));

  for (int m = 1; m <= 4; ++m) {
    CHECK_THAT(effective_information(input_of(GroupSizeDistribution::degenerate(m < 2 ? 2 : m), m, 1.7)),
               WithinRel(m < 2 ? 1.7 * 0.25 : 1.7, 1e-15));
  }

  double prev = effective_information(input_of(GroupSizeDistribution::degenerate(2), 2));
  for (int eta = 3; eta <= 60; ++eta) {
    const double cur = effective_information(input_of(GroupSizeDistribution::degenerate(eta), 2));
    CHECK(cur < prev);
    CHECK_THAT(cur, WithinAbs(1.0 - 0.5 + 2.0 / (eta * eta), 1e-15));
    prev = cur;
  }
  for (int k = 1; k <= 4; ++k) {
    const int eta = static_cast<int>(std::pow(10, k));
    const double gap = effective_information(input_of(GroupSizeDistribution::degenerate(eta), 3, 2.0)) -
                       effective_information_limit(3, 2.0);
    CHECK_THAT(gap, WithinRel(3 * 2.0 / (double(eta) * eta), 1e-8));
  }

  CHECK(effective_information_limit(2, 1.0) == 0.5);
  CHECK(effective_information_limit(1, 3.0) == 0.0);

  RngStream rng(77, 0);
  for (int r = 0; r < 20; ++r) {
    const auto in = input_of(random_pmf(rng), 2, 1.3);
    CHECK(effective_information(in) >= effective_information_limit(2, 1.3));
  }
}

TEST_CASE("moment functionals", "[bounds]") {
  const auto in = input_of(GroupSizeDistribution({{2, 0.5}, {4, 0.5}}), 2, 1.0, 0.5);
  const auto at0 = moment_functionals(0.0, in);
  CHECK_THAT(at0.m0, WithinAbs(3.0, 1e-15));
  CHECK_THAT(at0.m1, WithinAbs(1.5, 1e-15));
  for (double t : {0.2, 1.0, 3.0}) {
    const auto mf = moment_functionals(t, in);
    CHECK_THAT(mf.m1 / mf.m0, WithinAbs(0.5, 1e-15));
  }
  CHECK_THAT(moment_functionals(1.0, input_of(GroupSizeDistribution::degenerate(2), 2)).m0,
             WithinAbs(2 * std::exp(-2.0), 1e-16));
}

TEST_CASE("covariance bounds", "[bounds]") {
  const auto full = input_of(GroupSizeDistribution::degenerate(2), 2);
  const double omega_11 = std::exp(-2.0) * (std::exp(2.0) - 1) / 4;
  CHECK_THAT(breslow_covariance_omega(1.0, 1.0, full), WithinAbs(omega_11, 1e-13));
  CHECK_THAT(omega_11, WithinAbs(0.21617, 1e-5));
  CHECK(survival_bound_kstar(1.0, 1.0, full) == breslow_covariance_omega(1.0, 1.0, full));

  for (const auto& in : {input_of(GroupSizeDistribution({{3, 0.2}, {5, 0.8}}), 2, 1.0, 0.0),
                         input_of(GroupSizeDistribution::degenerate(4), 3, 0.5, 0.0, Baseline::weibull(1.6))}) {
    const ModelConfig c = config_of(in);
    for (double s : {0.1, 0.5, 1.2}) {
      CHECK_THAT(variance_integral(s, 2.0, in), WithinRel(oracle::variance_integral_by_quadrature(c, s, 2.0), 1e-11));
    }
  }

  const auto biased = input_of(GroupSizeDistribution({{3, 0.5}, {6, 0.5}}), 2, 1.0 / 12, 0.5);
  const double info = effective_information(biased);
  const double grid[] = {0.0, 0.2, 0.5, 1.0, 1.5, 2.5};
  for (double s : grid) {
    CHECK(kfunction(0.0, s, biased) == 0.0);
    for (double t : grid) {
      CHECK(kfunction(s, t, biased) == kfunction(t, s, biased));
      CHECK(breslow_covariance_omega(s, t, biased) == breslow_covariance_omega(t, s, biased));
      CHECK(survival_bound_kstar(s, t, biased) <= breslow_covariance_omega(s, t, biased) + 1e-15);
      // Plug-in part written through the projection (EZ/2) G log G of the time direction.
      const double hs = 0.5 * biased.mean_z * std::exp(-s) * s;
      const double ht = 0.5 * biased.mean_z * std::exp(-t) * t;
      CHECK_THAT(survival_bound_kstar(s, t, biased), WithinAbs(kfunction(s, t, biased) + 4.0 * hs * ht / info, 1e-14));
    }
  }
  double prev = 0.0;
  for (double s = 0.1; s < 4.0; s += 0.1) {
    const double k = kfunction(s, s, biased) / std::exp(-2 * s);
    CHECK(k >= prev);
    prev = k;
  }

  using Cov = double (*)(double, double, const BoundsInput&);
  for (Cov f : {Cov{&kfunction}, Cov{&breslow_covariance_omega}, Cov{&survival_bound_kstar}}) {
    Eigen::MatrixXd k(6, 6);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) k(a, b) = f(grid[a], grid[b], biased);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }

  CHECK_THROWS_AS(kfunction(1.0, 9.0, full), std::domain_error);
  CHECK_THROWS_AS(kfunction(-1.0, 1.0, full), std::domain_error);
  CHECK_NOTHROW(effective_information(input_of(GroupSizeDistribution::degenerate(2), 1)));
}
