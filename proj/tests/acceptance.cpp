// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "ncc/bounds.hpp"
#include "ncc/estimators.hpp"
#include "ncc/experiment.hpp"
#include "ncc/operators.hpp"
#include "ncc/verify.hpp"
#include "oracles.hpp"

#ifndef NCC_CLI_PATH
#error "NCC_CLI_PATH must name the command-line tool"
#endif

using namespace ncc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelConfig ac1_config() {
  ModelConfig c;
  c.baseline = Baseline::exponential();
  c.covariate = CovariateLaw::standard_normal();
  c.group_size = GroupSizeDistribution::uniform_on({3, 4, 5});
  c.m = 2;
  return c;
}

void ac1() {
  const ModelConfig c = ac1_config();
  const auto t0 = std::chrono::steady_clock::now();
  const double quad = information_by_quadrature(QuadratureScheme(c), Exec::serial);
  const double secs = seconds_since(t0);
  const double closed = effective_information(BoundsInput::from_config(c));
  const double rel = std::abs(quad - closed) / closed;
  report("AC1", rel <= 1e-6 && secs < 60.0,
         format("quadrature %.12f closed form %.12f rel err %.2e (tol 1e-6), %.1f s serial (limit 60 s)", quad, closed,
                rel, secs));
}

void ac2() {
  ModelConfig c;
  c.covariate = CovariateLaw::standard_normal();
  c.group_size = GroupSizeDistribution::degenerate(3);
  c.m = 3;
  const double var_z = c.covariate.variance();
  const double closed = effective_information(BoundsInput::from_config(c));
  const double quad = information_by_quadrature(QuadratureScheme(c));
  const double rel = std::abs(quad - var_z) / var_z;

  bool exact = closed == var_z;
  for (int m = 2; m <= 6; ++m) {
    BoundsInput in;
    in.group_size = GroupSizeDistribution::degenerate(m);
    in.m = m;
    in.var_z = 1.0;
    exact = exact && effective_information(in) == 1.0;
  }
  report("AC2", exact && rel <= 1e-6,
         format("eta = m = 3: closed form %.17g (Var Z %.17g, exact for m = 2..6: %s), quadrature rel err %.2e (tol 1e-6)",
                closed, var_z, exact ? "yes" : "no", rel));
}

void ac3() {
  double prev = 0.0;
  bool monotone = true;
  std::string seq;
  double last = 0.0;
  for (int eta : {5, 10, 20, 50}) {
    BoundsInput in;
    in.group_size = GroupSizeDistribution::degenerate(eta);
    in.m = 2;
    in.var_z = 1.0;
    const double v = 1.0 / effective_information(in);
    monotone = monotone && v > prev && v < 2.0;
    prev = v;
    last = v;
    seq += format("%s%.4f", seq.empty() ? "" : ", ", v);
  }
  const double limit = mple_asymptotic_variance(2, 1.0);
  const double gap = (limit - last) / limit;
  report("AC3", monotone && gap <= 2e-3,
         format("1/I for eta = 5, 10, 20, 50: %s; limit %.4f; gap at 50 %.3f%% (tol 0.2%%)", seq.c_str(), limit,
                100 * gap));
}

void ac4() {
  double worst = 0.0;
  int cases = 0;
  for (const Baseline& b : {Baseline::exponential(), Baseline::weibull(2.5)}) {
    for (int eta = 1; eta <= 8; ++eta) {
      for (int k = 1; k <= std::min(3, eta); ++k) {
        for (int j = 0; j <= 3; ++j) {
          worst = std::max(worst, std::abs(lemma43_integral(eta, k, j) - oracle::lemma43_by_quadrature(b, eta, k, j)));
          ++cases;
        }
      }
    }
  }
  report("AC4", worst <= 1e-8,
         format("%d cases under Exp(1) and Weibull(2.5): max abs err %.2e (tol 1e-8)", cases, worst));
}

void ac5() {
  VerifyOptions opt;
  opt.directions = 20;
  const auto t0 = std::chrono::steady_clock::now();
  const VerifyReport rep = run_identity_suite(ac1_config(), opt);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  bool all = true;
  for (const auto& c : rep.checks) {
    all = all && c.passed && c.residual <= 1e-6;
    if (c.residual > worst) {
      worst = c.residual;
      worst_name = c.name;
    }
  }
  report("AC5", all && secs < 300.0,
         format("%zu identities, 20 directions: max residual %.2e (%s, tol 1e-6), %.1f s (limit 300 s)",
                rep.checks.size(), worst, worst_name.c_str(), secs));
}

void ac6() {
  ExperimentSpec spec;
  spec.config.covariate = CovariateLaw::standard_normal();
  spec.config.group_size = GroupSizeDistribution::degenerate(5);
  spec.config.m = 2;
  spec.n = 1000;
  spec.replications = 400;
  spec.seed = 7;
  const McReport rep = run_mc_experiment(spec);
  const bool mean_ok = std::abs(rep.mean_theta_hat) < 0.02;
  const bool var_ok = rep.scaled_variance >= 1.8 && rep.scaled_variance <= 2.2;
  const bool bound_ok = std::abs(rep.inverse_information - 1.7241) < 5e-5 && rep.inverse_information < rep.scaled_variance;
  report("AC6", mean_ok && var_ok && bound_ok && rep.used > 0,
         format("mean theta_hat %.5f (in (-0.02, 0.02)), n Var %.4f (in [1.8, 2.2]), sigma2 %.4f, 1/I %.4f < empirical, "
                "%zu/%zu used",
                rep.mean_theta_hat, rep.scaled_variance, rep.sigma2_mple, rep.inverse_information, rep.used,
                rep.replications));
}

void ac7() {
  ExperimentSpec spec;
  spec.config.baseline = Baseline::exponential();
  spec.config.covariate = CovariateLaw::standard_normal();
  spec.config.group_size = GroupSizeDistribution::degenerate(2);
  spec.config.m = 2;
  spec.n = 2000;
  spec.replications = 300;
  spec.seed = 7;
  spec.grid = {{1.0, 1.0}};
  const McReport rep = run_mc_experiment(spec);
  const double target = std::exp(-2.0) * (std::exp(2.0) - 1.0) / 4.0;
  const double emp = rep.grid.at(0).empirical;
  const double rel = (emp - target) / target;
  report("AC7", std::abs(rel) <= 0.15 && std::abs(rep.grid[0].kstar - target) < 1e-12,
         format("n Var(G_hat(1)) %.4f vs K*(1,1) %.4f: %+.1f%% (tol 15%%), %zu/%zu used", emp, rep.grid[0].kstar,
                100 * rel, rep.used, rep.replications));
}

void ac8() {
  const QuadratureScheme s(ac1_config());
  double lo = 1e300, hi = 0.0;
  bool ok = true;
  for (int d = 0; d < 10; ++d) {
    RngStream rng(8, stream_id(0, static_cast<std::uint64_t>(d)));
    const TimeFunction a = random_time_direction(s, rng);
    const CovariateFunction b = random_covariate_direction(s, rng);
    const double tau = rng.normal();
    const double e1 = hellinger_direction_check(tau, a, b, 1e-2);
    const double e2 = hellinger_direction_check(tau, a, b, 5e-3);
    const double ratio = e2 / e1;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ok = ok && ratio >= 0.35 && ratio <= 0.65;
  }
  report("AC8", ok, format("10 directions, eps 1e-2 -> 5e-3: residual ratio in [%.4f, %.4f] (allowed [0.35, 0.65])", lo, hi));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ac9() {
  const fs::path dir = fs::temp_directory_path() / "ncc_acceptance_ac9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "mc.cfg");
    cfg << "baseline = exponential\ncovariate = normal\neta = [[5,1]]\nm = 2\ntheta = 0\n"
           "n = 300\nreplications = 40\ngrid = [[0.5,1],1]\n";
  }
  auto run = [&](const char* threads, const char* out) {
    const std::string cmd = std::string("NCC_NUM_THREADS=") + threads + " \"" + NCC_CLI_PATH + "\" mc --config \"" +
                            (dir / "mc.cfg").string() + "\" --seed 11 --out \"" + (dir / out).string() +
                            "\" --accept-warnings > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const int r1 = run("1", "a");
  const int r2 = run("4", "b");
  const int r3 = run("2", "c");
  const std::string a = slurp(dir / "a" / "mc.csv");
  const bool same = !a.empty() && a == slurp(dir / "b" / "mc.csv") && a == slurp(dir / "c" / "mc.csv");
  report("AC9", r1 == 0 && r2 == 0 && r3 == 0 && same,
         format("three mc runs (1, 4, 2 workers): exit %d/%d/%d, mc.csv %zu bytes, byte-identical: %s", r1, r2, r3,
                a.size(), same ? "yes" : "no"));
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const std::pair<const char*, void (*)()> checks[] = {{"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
                                                       {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  for (const auto& [id, f] : checks) {
    try {
      f();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
