#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ncc/model.hpp"
#include "ncc/rng.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace ncc;

namespace {

ModelConfig make_config(CovariateLaw h, GroupSizeDistribution eta, int m, double theta = 0.0) {
  ModelConfig c;
  c.covariate = h;
  c.group_size = std::move(eta);
  c.m = m;
  c.theta = theta;
  return c;
}

Observation random_observation(RngStream& rng, int eta, int m, const CovariateLaw& h) {
  Observation o;
  o.eta = eta;
  std::vector<int> labels(static_cast<std::size_t>(eta));
  for (int j = 0; j < eta; ++j) labels[static_cast<std::size_t>(j)] = j + 1;
  std::shuffle(labels.begin(), labels.end(), rng);
  o.sampled.assign(labels.begin(), labels.begin() + m);
  std::sort(o.sampled.begin(), o.sampled.end());
  o.failure = o.sampled[rng() % static_cast<unsigned>(m)];
  o.time = -std::log(rng.uniform_open());
  for (int k = 0; k < m; ++k) o.covariates.push_back(h.sample(rng));
  return o;
}

}  // namespace

TEST_CASE("sampling weight", "[model]") {
  CHECK(sampling_weight(5, 2) == 0.25);
  CHECK(sampling_weight(4, 4) == 1.0);
  CHECK(sampling_weight(2, 1) == 1.0);
  // 7 non-failures, subsets of size 2.
  int subsets = 0;
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b) ++subsets;
  CHECK_THAT(sampling_weight(8, 3), WithinRel(1.0 / subsets, 1e-15));
  CHECK_THROWS_AS(sampling_weight(3, 4), std::domain_error);
  CHECK_THROWS_AS(sampling_weight(3, 0), std::domain_error);
}

TEST_CASE("baseline laws", "[model]") {
  const Baseline e = Baseline::exponential();
  const Baseline w = Baseline::weibull(1.7);
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    CHECK(e.hazard(t) == 1.0);
    CHECK_THAT(e.quantile(std::exp(-t)), WithinAbs(t, 1e-14));
    for (const Baseline* b : {&e, &w}) {
      CHECK_THAT(b->hazard(t) * b->survival(t), WithinAbs(b->density(t), 1e-14));
      CHECK_THAT(b->quantile(b->survival(t)), WithinAbs(t, 1e-12));
    }
  }
  CHECK(e.survival(0.0) == 1.0);
  CHECK(w.survival(0.0) == 1.0);
  CHECK(e.quantile(0.25) == -std::log(0.25));
  CHECK_THROWS_AS(e.quantile(0.0), std::domain_error);
  CHECK_THAT(e.horizon(), WithinAbs(Baseline::kDefaultHorizonHazard, 1e-14));

  // Trapezoid check of the density normalization and survival tail.
  for (const Baseline* b : {&e, &w}) {
    const int n = 200000;
    const double top = 40.0;
    const double h = top / n;
    double mass = 0.0, tail = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double t = k * h;
      const double wt = (k == 0 || k == n) ? 0.5 : 1.0;
      mass += wt * h * b->density(t);
      if (t >= 1.0) tail += (t == 1.0 ? 0.5 : wt) * h * b->density(t);
    }
    CHECK_THAT(mass, WithinAbs(1.0, 1e-6));
    CHECK_THAT(tail, WithinAbs(b->survival(1.0), 1e-6));
  }
}

TEST_CASE("covariate laws", "[model]") {
  const CovariateLaw laws[] = {CovariateLaw::standard_normal(), CovariateLaw::truncated_normal(1.5),
                               CovariateLaw::uniform()};
  for (const auto& h : laws) {
    const int n = 400000;
    const double lo = std::max(h.support_lower(), -12.0);
    const double hi = std::min(h.support_upper(), 12.0);
    const double step = (hi - lo) / n;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0, e1 = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double z = lo + k * step;
      const double wt = (k == 0 || k == n ? 0.5 : 1.0) * step * h.density(z);
      m0 += wt;
      m1 += wt * z;
      m2 += wt * z * z;
      e1 += wt * std::exp(0.7 * z);
    }
    CHECK_THAT(m0, WithinAbs(1.0, 1e-8));
    CHECK_THAT(m1, WithinAbs(h.mean(), 1e-8));
    CHECK_THAT(m2 - m1 * m1, WithinAbs(h.variance(), 1e-8));
    CHECK_THAT(e1, WithinRel(h.exp_moment(0.7), 1e-8));
    CHECK(h.exp_moment(0.0) == 1.0);
    CHECK(h.variance() > 0.0);

    const auto rule = h.quadrature(40);
    double q0 = 0.0, q2 = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      q0 += rule.weights[k];
      q2 += rule.weights[k] * (rule.nodes[k] - h.mean()) * (rule.nodes[k] - h.mean());
    }
    CHECK_THAT(q0, WithinAbs(1.0, 1e-10));
    CHECK_THAT(q2, WithinAbs(h.variance(), 1e-10));
  }
  CHECK(CovariateLaw::standard_normal().moment_radius() == CovariateLaw::kNormalRadiusCap);
  CHECK(std::isinf(CovariateLaw::uniform().moment_radius()));
}

TEST_CASE("group size distribution", "[model]") {
  const auto d = GroupSizeDistribution({{5, 0.5}, {3, 0.5}});
  CHECK(d.support() == std::vector<int>{3, 5});
  CHECK(d.min_size() == 3);
  CHECK(d.max_size() == 5);
  CHECK_THAT(d.mean(), WithinAbs(4.0, 1e-15));
  CHECK_THAT(d.mean_inverse(), WithinAbs(0.5 * (1.0 / 3 + 1.0 / 5), 1e-15));
  CHECK_THROWS_AS(GroupSizeDistribution({{1, 1.0}}), ConfigError);
  CHECK_THROWS_AS(GroupSizeDistribution({{3, 0.5}, {3, 0.5}}), ConfigError);
  CHECK_THROWS_AS(GroupSizeDistribution({{3, 0.5}, {4, 0.4}}), ConfigError);
  CHECK_THROWS_AS(GroupSizeDistribution({{3, -0.1}, {4, 1.1}}), ConfigError);
  CHECK(GroupSizeDistribution({{3, 1.0}, {4, 0.0}}).support() == std::vector<int>{3});
}

TEST_CASE("survival given covariate", "[model]") {
  const Baseline e = Baseline::exponential();
  CHECK_THAT(survival_given_covariate(e, 1.0, 1.0, std::log(2.0)), WithinAbs(std::exp(-2.0), 1e-15));
  CHECK(survival_given_covariate(e, 0.7, 1.3, 0.0) == e.survival(0.7));
  CHECK(survival_given_covariate(e, 0.7, 0.0, 0.9) == e.survival(0.7));
}

TEST_CASE("mixture survival against a dense trapezoid", "[model]") {
  const ModelConfig c = make_config(CovariateLaw::standard_normal(), GroupSizeDistribution::degenerate(2), 2);
  const int n = 1000000;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / n;
  double oracle = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double z = lo + k * h;
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    oracle += (k == 0 || k == n ? 0.5 : 1.0) * h * std::exp(-std::exp(0.5 * z)) * phi;
  }
  CHECK_THAT(mixture_survival(c, 1.0, 0.5), WithinAbs(oracle, 1e-8));
  CHECK(mixture_survival(c, 1.3, 0.0) == c.baseline.survival(1.3));
  CHECK(mixture_survival(c, 0.0, 0.5) == 1.0);
  CHECK_THROWS_AS(mixture_survival(c, 1.0, 2.0), std::domain_error);

  double prev = 1.0;
  for (double t = 0.0; t < 6.0; t += 0.25) {
    const double s = mixture_survival(c, t, 0.8);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("observation and null densities", "[model]") {
  const CovariateLaw h = CovariateLaw::uniform();
  {
    const ModelConfig c = make_config(h, GroupSizeDistribution({{2, 0.4}, {3, 0.6}}), 2);
    const Observation x{2, 1, {1, 2}, 0.8, {0.2, 0.9}};
    CHECK_THAT(observation_density(x, c), WithinRel(std::exp(-2 * 0.8) * 0.4, 1e-14));
  }
  {
    const ModelConfig c = make_config(h, GroupSizeDistribution::degenerate(3), 2);
    const Observation x{3, 2, {2, 3}, 0.5, {0.3, 0.6}};
    CHECK_THAT(null_density(x, c), WithinRel(0.5 * std::exp(-0.5) * std::exp(-1.0), 1e-14));
  }

  RngStream rng(11, 0);
  const ModelConfig c = make_config(CovariateLaw::standard_normal(), GroupSizeDistribution({{3, 0.5}, {5, 0.5}}), 2);
  for (int i = 0; i < 100; ++i) {
    const Observation x = random_observation(rng, i % 2 ? 3 : 5, 2, c.covariate);
    CHECK(observation_density(x, c) == null_density(x, c));
    // Relabeling the members leaves the null density unchanged.
    Observation y = x;
    y.sampled = {1, 2};
    y.failure = x.sampled[0] == x.failure ? 1 : 2;
    CHECK_THAT(null_density(y, c), WithinRel(null_density(x, c), 1e-15));
  }

  // Continuity in theta at a fixed observation.
  ModelConfig ct = c;
  const Observation x{5, 2, {2, 4}, 0.4, {0.3, -0.8}};
  ct.theta = 0.3;
  const double mid = observation_density(x, ct);
  ct.theta = 0.3 + 1e-7;
  const double up = observation_density(x, ct);
  CHECK(mid > 0.0);
  CHECK_THAT(up, WithinRel(mid, 1e-5));
}

TEST_CASE("null density integrates to one", "[model]") {
  // Sum over (eta, i, r) of the tensor quadrature over t and z_r.
  const ModelConfig c = make_config(CovariateLaw::uniform(), GroupSizeDistribution({{2, 0.3}, {4, 0.7}}), 2);
  const auto tq = quadrature::gauss_legendre(64, 0.0, 1.0);  // u = G(t)
  const auto zq = quadrature::gauss_legendre(8, 0.0, 1.0);
  double total = 0.0;
  for (int eta : c.group_size.support()) {
    for (int i = 1; i <= eta; ++i) {
      for (int j = 1; j <= eta; ++j) {
        if (j == i) continue;
        Observation x{eta, i, {std::min(i, j), std::max(i, j)}, 0.0, {0.0, 0.0}};
        for (std::size_t k = 0; k < tq.size(); ++k) {
          x.time = c.baseline.quantile(tq.nodes[k]);
          const double jac = 1.0 / c.baseline.density(x.time);
          for (std::size_t a = 0; a < zq.size(); ++a) {
            for (std::size_t b = 0; b < zq.size(); ++b) {
              x.covariates = {zq.nodes[a], zq.nodes[b]};
              total += tq.weights[k] * jac * zq.weights[a] * zq.weights[b] * null_density(x, c);
            }
          }
        }
      }
    }
  }
  CHECK_THAT(total, WithinAbs(1.0, 1e-6));
}

TEST_CASE("validate_config", "[model]") {
  {
    const auto r = validate_config(make_config(CovariateLaw::standard_normal(), GroupSizeDistribution::degenerate(5), 2));
    CHECK_FALSE(r.boundedness);
    CHECK_FALSE(r.cohort_size);
    CHECK_FALSE(r.positivity);
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.usable());
  }
  CHECK(validate_config(make_config(CovariateLaw::truncated_normal(3.0), GroupSizeDistribution::degenerate(5), 2))
            .boundedness);
  CHECK(validate_config(make_config(CovariateLaw::standard_normal(), GroupSizeDistribution::degenerate(8), 2))
            .cohort_size);
  CHECK(validate_config(make_config(CovariateLaw::uniform(), GroupSizeDistribution::degenerate(3), 2, 0.5)).positivity);
  CHECK_FALSE(
      validate_config(make_config(CovariateLaw::uniform(), GroupSizeDistribution::degenerate(3), 2, -0.5)).positivity);
  CHECK_FALSE(validate_config(make_config(CovariateLaw::uniform(), GroupSizeDistribution::degenerate(3), 4)).usable());
  CHECK_THROWS_AS(validate_config(make_config(CovariateLaw::uniform(), GroupSizeDistribution::degenerate(3), 0)),
                  ConfigError);
}
