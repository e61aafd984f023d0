#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "ncc/estimators.hpp"
#include "ncc/rng.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace ncc;

namespace {

Observation pair_obs(double z_fail, double z_ctrl, double t = 1.0, int eta = 2) {
  return {eta, 1, {1, 2}, t, {z_fail, z_ctrl}};
}

Dataset of(std::vector<Observation> obs) {
  Dataset d;
  d.observations = std::move(obs);
  return d;
}

Dataset random_dataset(std::uint64_t seed, std::size_t n, int m) {
  RngStream rng(seed, 0);
  Dataset d;
  for (std::size_t j = 0; j < n; ++j) {
    Observation o;
    o.eta = m + 2;
    for (int k = 1; k <= m; ++k) o.sampled.push_back(k);
    o.failure = 1 + static_cast<int>(rng() % static_cast<unsigned>(m));
    o.time = rng.uniform_open();
    for (int k = 0; k < m; ++k) o.covariates.push_back(rng.normal());
    d.observations.push_back(o);
  }
  return d;
}

ModelConfig sim_config(int eta, int m, double theta) {
  ModelConfig c;
  c.group_size = GroupSizeDistribution::degenerate(eta);
  c.m = m;
  c.theta = theta;
  return c;
}

}  // namespace

TEST_CASE("partial log likelihood", "[estimators]") {
  const Dataset d = random_dataset(1, 50, 3);
  CHECK_THAT(partial_loglik(d, 0.0), WithinRel(-50.0 * std::log(3.0), 1e-14));
  CHECK_THAT(partial_loglik(of({pair_obs(1.0, 0.0)}), 1.0), WithinAbs(1.0 - std::log(std::exp(1.0) + 1.0), 1e-15));
  CHECK_THAT(partial_loglik(of({pair_obs(1.0, 0.0)}), 1.0), WithinAbs(-0.31326, 1e-5));

  Dataset shifted = d;
  for (auto& o : shifted.observations) {
    for (double& z : o.covariates) z += 3.75;
  }
  for (double th : {-1.0, 0.2, 2.0}) {
    CHECK_THAT(partial_loglik(shifted, th), WithinAbs(partial_loglik(d, th), 1e-12));
  }

  CHECK_THROWS_AS(partial_loglik(Dataset{}, 0.0), DegenerateLikelihoodError);
  CHECK_THROWS_AS(partial_loglik(of({{2, 1, {1}, 1.0, {0.3}}}), 0.0), DegenerateLikelihoodError);
  CHECK_THROWS_AS(partial_loglik(of({{3, 3, {1, 2}, 1.0, {0.3, 0.1}}}), 0.0), std::invalid_argument);
}

TEST_CASE("score and information", "[estimators]") {
  const Dataset d = random_dataset(2, 200, 3);
  const double delta = 1e-5;
  for (double th : {-0.7, 0.0, 0.4, 1.3}) {
    const auto si = score_and_information(d, th);
    const double fd = (partial_loglik(d, th + delta) - partial_loglik(d, th - delta)) / (2 * delta);
    CHECK_THAT(si.score, WithinAbs(fd, 1e-6));
    const double fd2 =
        -(score_and_information(d, th + delta).score - score_and_information(d, th - delta).score) / (2 * delta);
    CHECK_THAT(si.information, WithinAbs(fd2, 1e-5));
    CHECK(si.information >= 0.0);
  }

  const auto flat = score_and_information(of({{3, 2, {1, 2, 3}, 1.0, {0.4, 0.4, 0.4}}}), 0.9);
  CHECK(flat.score == 0.0);
  CHECK(flat.information == 0.0);

  const double a = 1.7, b = -0.6;
  CHECK_THAT(score_and_information(of({pair_obs(a, b)}), 0.0).information, WithinAbs((a - b) * (a - b) / 4, 1e-15));

  for (double th : {-0.3, 0.8}) {
    const auto s = score_and_information(d, th, Exec::serial);
    const auto p = score_and_information(d, th, Exec::parallel);
    CHECK_THAT(p.score, WithinAbs(s.score, 1e-12));
    CHECK_THAT(p.information, WithinAbs(s.information, 1e-12));
  }
}

TEST_CASE("fit_mple on hand-built data", "[estimators]") {
  const MpleFit fit = fit_mple(of({pair_obs(1.0, 0.0), {2, 2, {1, 2}, 2.0, {1.0, 0.0}}}));
  CHECK(fit.converged);
  CHECK_THAT(fit.theta_hat, WithinAbs(0.0, 1e-12));
  CHECK_THAT(fit.observed_information, WithinAbs(0.5, 1e-12));
  CHECK_THAT(fit.standard_error, WithinAbs(std::sqrt(2.0), 1e-12));

  CHECK_THROWS_AS(fit_mple(of({pair_obs(1.0, 0.0)})), SeparationError);
  CHECK_THROWS_AS(fit_mple(of({pair_obs(0.0, 1.0)})), SeparationError);
  CHECK_THROWS_AS(fit_mple(of({pair_obs(0.5, 0.5)})), DegenerateLikelihoodError);
}

TEST_CASE("fit_mple location invariance", "[estimators]") {
  const Dataset d = random_dataset(4, 300, 2);
  Dataset shifted = d;
  for (auto& o : shifted.observations) {
    for (double& z : o.covariates) z -= 2.5;
  }
  const MpleFit a = fit_mple(d);
  const MpleFit b = fit_mple(shifted);
  CHECK(a.iterations == b.iterations);
  CHECK_THAT(b.theta_hat, WithinAbs(a.theta_hat, 1e-12));
}

TEST_CASE("fit_mple recovers the simulated parameter", "[estimators]") {
  const Dataset d = simulate_dataset(sim_config(5, 2, 0.5), 5000, 31);
  const MpleFit fit = fit_mple(d);
  CHECK(fit.converged);
  CHECK(fit.iterations <= 10);
  CHECK(std::abs(fit.theta_hat - 0.5) <= 3.0 * fit.standard_error);
  CHECK(std::abs(fit.score_at_solution) < 1e-10 * fit.observed_information);

  SolverOptions serial;
  serial.exec = Exec::serial;
  CHECK_THAT(fit_mple(d, serial).theta_hat, WithinAbs(fit.theta_hat, 1e-12));
}

TEST_CASE("MPLE asymptotic variance", "[estimators]") {
  CHECK(mple_asymptotic_variance(2, 1.0) == 2.0);
  CHECK(mple_asymptotic_variance(5, 2.0) == 0.625);
  double prev = mple_asymptotic_variance(2, 1.0);
  for (int m = 3; m < 200; ++m) {
    const double v = mple_asymptotic_variance(m, 1.0);
    CHECK(v < prev);
    CHECK(v > 1.0);
    prev = v;
  }
  CHECK_THROWS_AS(mple_asymptotic_variance(1, 1.0), std::domain_error);
}

TEST_CASE("step function", "[estimators]") {
  const StepFunction f({1.0, 2.0}, {0.5, 0.8}, 0.1);
  CHECK(f(0.5) == 0.1);
  CHECK(f(1.0) == 0.5);
  CHECK(f(1.99) == 0.5);
  CHECK(f(2.0) == 0.8);
  CHECK(f(10.0) == 0.8);
  CHECK_THROWS_AS(StepFunction({2.0, 1.0}, {0.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("Breslow estimator", "[estimators]") {
  {
    const BreslowFit b = breslow(of({{4, 1, {1, 3}, 0.7, {0.2, -0.4}}}), 0.0);
    CHECK(b.cumulative_hazard(0.69) == 0.0);
    CHECK_THAT(b.cumulative_hazard(0.7), WithinAbs(0.25, 1e-15));
    CHECK_THAT(b.survival(5.0), WithinAbs(std::exp(-0.25), 1e-15));
  }
  {
    const BreslowFit b = breslow(of({{2, 1, {1, 2}, 0.3, {0.0, 1.0}}, {3, 2, {1, 2}, 0.9, {0.5, 0.1}}}), 0.0);
    CHECK_THAT(b.cumulative_hazard(0.5), WithinAbs(1.0 / 5, 1e-15));
    CHECK_THAT(b.cumulative_hazard(1.0), WithinAbs(1.0 / 5 + 1.0 / 3, 1e-15));
  }
  {
    // Full cohort at the null: Nelson-Aalen of the group minima, each group
    // contributing eta members at risk.
    const Dataset d = simulate_dataset(sim_config(3, 3, 0.0), 400, 6);
    const BreslowFit b = breslow(d, 0.0);
    std::vector<double> t;
    for (const auto& o : d.observations) t.push_back(o.time);
    std::sort(t.begin(), t.end());
    double na = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      na += 1.0 / (3.0 * static_cast<double>(t.size() - k));
      CHECK_THAT(b.cumulative_hazard(t[k]), WithinRel(na, 1e-12));
    }
  }
  {
    // Nonzero theta weights each member by exp(theta z).
    const double th = 0.7;
    const BreslowFit b = breslow(of({{2, 1, {1, 2}, 0.3, {0.0, 1.0}}, {4, 2, {1, 2}, 0.9, {0.5, 0.1}}}), th);
    const double d1 = (2.0 / 2) * (1 + std::exp(th)) + (4.0 / 2) * (std::exp(0.5 * th) + std::exp(0.1 * th));
    const double d2 = (4.0 / 2) * (std::exp(0.5 * th) + std::exp(0.1 * th));
    CHECK_THAT(b.cumulative_hazard(0.5), WithinRel(1.0 / d1, 1e-14));
    CHECK_THAT(b.cumulative_hazard(1.0), WithinRel(1.0 / d1 + 1.0 / d2, 1e-14));
  }
  {
    const BreslowFit b = breslow(of({pair_obs(0.0, 1.0, 0.5), pair_obs(1.0, 0.0, 0.5)}), 0.0);
    CHECK(b.tie_count == 1);
    CHECK_THAT(b.cumulative_hazard(0.5), WithinAbs(1.0 / 4 + 1.0 / 4, 1e-15));
  }
  CHECK_THROWS_AS(breslow(Dataset{}, 0.0), std::invalid_argument);
}

TEST_CASE("fit and Breslow CSV output", "[estimators]") {
  const BreslowFit b = breslow(of({pair_obs(1.0, 0.0, 0.5), pair_obs(0.0, 1.0, 1.5)}), 0.0);
  std::ostringstream out;
  write_breslow_csv(out, b);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,cumhaz,survival");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2);

  std::ostringstream fit_out;
  write_fit_csv(fit_out, fit_mple(of({pair_obs(1.0, 0.0), {2, 2, {1, 2}, 2.0, {1.0, 0.0}}})));
  CHECK(fit_out.str().find("theta_hat,") != std::string::npos);
}
