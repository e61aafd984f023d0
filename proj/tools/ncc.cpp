// ncc: simulate, fit, bounds, verify and mc subcommands.
//
// Exit codes: 0 success, 1 runtime failure, 2 validation failure,
// 3 identity-suite residual failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ncc/bounds.hpp"
#include "ncc/config_io.hpp"
#include "ncc/estimators.hpp"
#include "ncc/experiment.hpp"
#include "ncc/model.hpp"
#include "ncc/parallel.hpp"
#include "ncc/sampler.hpp"
#include "ncc/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;
constexpr int kExitResidual = 3;

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "model/run configuration file");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "root random seed");
  cmd->add_option("--out", c.out, "output directory");
}

std::ofstream open_out(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  const auto path = (fs::path(c.out) / name).string();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  return f;
}

ncc::RunConfig load(const Common& c) {
  try {
    return ncc::load_run_config(c.config);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
}

void print_validation(const ncc::ValidationReport& v) {
  for (const auto& w : v.warnings) std::cerr << "warning: " << w << "\n";
}

ncc::ValidationReport validate_usable(const ncc::ModelConfig& model) {
  ncc::ValidationReport v;
  try {
    v = ncc::validate_config(model);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
  print_validation(v);
  if (!v.usable()) throw ValidationFailure("configuration is not usable: need eta >= 2 and m <= every group size");
  return v;
}

int cmd_simulate(const Common& c) {
  const auto rc = load(c);
  validate_usable(rc.model);
  const auto ds = ncc::simulate_dataset(rc.model, rc.n, c.seed);
  {
    auto f = open_out(c, "dataset.csv");
    ncc::write_dataset(f, ds);
  }
  std::printf("simulated %zu strata (ties %zu) -> %s\n", ds.size(), ds.tie_count,
              (fs::path(c.out) / "dataset.csv").c_str());
  if (rc.model.theta == 0.0) {
    const auto g = ncc::goodness_of_fit_check(ds, rc.model);
    auto f = open_out(c, "gof.txt");
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "ks_statistic %.6g p %.4g\neta_chi_square %.6g df %.0f p %.4g\n"
                  "failure_mean p %.4g\nfailure_second_moment p %.4g\ncontrol_mean p %.4g\n"
                  "control_second_moment p %.4g\nties %zu\n",
                  g.ks_statistic, g.ks_p_value, g.eta_chi_square, g.eta_df, g.eta_p_value, g.failure_mean_p_value,
                  g.failure_second_moment_p_value, g.control_mean_p_value, g.control_second_moment_p_value,
                  g.tie_count);
    f << buf;
    std::printf("goodness of fit: min p-value %.4g\n", g.min_p_value());
  }
  return 0;
}

int cmd_fit(const Common& c, const std::string& data) {
  ncc::Dataset ds;
  try {
    ds = ncc::load_dataset(data);
  } catch (const std::invalid_argument& e) {
    throw ValidationFailure(e.what());
  }
  if (!c.config.empty()) {
    const auto rc = load(c);
    for (const auto& o : ds.observations) {
      try {
        o.check_structure(rc.model.m);
      } catch (const std::invalid_argument& e) {
        throw ValidationFailure(e.what());
      }
    }
  }
  ncc::MpleFit fit;
  try {
    fit = ncc::fit_mple(ds);
  } catch (const ncc::DegenerateLikelihoodError& e) {
    throw ValidationFailure(e.what());
  }
  const auto b = ncc::breslow(ds, fit.theta_hat);
  {
    auto f = open_out(c, "fit.csv");
    ncc::write_fit_csv(f, fit);
  }
  {
    auto f = open_out(c, "breslow.csv");
    ncc::write_breslow_csv(f, b);
  }
  std::printf("theta_hat %.10g  se %.6g  iterations %d\n", fit.theta_hat, fit.standard_error, fit.iterations);
  return 0;
}

int cmd_bounds(const Common& c) {
  const auto rc = load(c);
  const auto v = validate_usable(rc.model);
  const auto in = ncc::BoundsInput::from_config(rc.model);
  auto f = open_out(c, "bounds.csv");
  char buf[256];
  const double info = ncc::effective_information(in);
  const double limit = ncc::effective_information_limit(in.m, in.var_z);
  f << "key,value\n";
  std::snprintf(buf, sizeof buf, "information,%.17g\ninformation_limit,%.17g\n", info, limit);
  f << buf;
  if (in.m >= 2) {
    const double s2 = ncc::mple_asymptotic_variance(in.m, in.var_z);
    std::snprintf(buf, sizeof buf, "sigma2_mple,%.17g\nefficiency_ratio,%.17g\n", s2, (1.0 / info) / s2);
    f << buf;
  }
  std::snprintf(buf, sizeof buf, "xi_functional,%.17g\n", v.xi_functional);
  f << buf;
  f << "\ns,t,kstar,omega,k\n";
  for (const auto& [s, t] : rc.grid) {
    try {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s, t, ncc::survival_bound_kstar(s, t, in),
                    ncc::breslow_covariance_omega(s, t, in), ncc::kfunction(s, t, in));
    } catch (const std::domain_error& e) {
      throw ValidationFailure(e.what());
    }
    f << buf;
  }
  std::printf("I*rho %.10g  I* limit %.10g\n", info, limit);
  return 0;
}

int cmd_verify(const Common& c, int directions, const ncc::SchemeOptions& scheme) {
  const auto rc = load(c);
  validate_usable(rc.model);
  if (rc.model.group_size.min_size() < 3) throw ValidationFailure("verify requires every group size >= 3");
  ncc::VerifyOptions opt;
  opt.seed = c.seed;
  opt.directions = directions;
  opt.scheme = scheme;
  ncc::ModelConfig null_model = rc.model;
  null_model.theta = 0.0;
  const auto rep = ncc::run_identity_suite(null_model, opt);
  {
    auto f = open_out(c, "verify.csv");
    ncc::write_verify_csv(f, rep);
  }
  {
    auto f = open_out(c, "verify.txt");
    ncc::write_verify_text(f, rep);
  }
  ncc::write_verify_text(std::cout, rep);
  return rep.all_passed() ? 0 : kExitResidual;
}

int cmd_mc(const Common& c, bool accept_warnings) {
  const auto rc = load(c);
  const auto v = validate_usable(rc.model);
  if (!v.warnings.empty() && !accept_warnings) {
    throw ValidationFailure("validation produced warnings; rerun with --accept-warnings to proceed");
  }
  ncc::ExperimentSpec spec;
  spec.config = rc.model;
  spec.n = rc.n;
  spec.replications = rc.replications;
  spec.seed = c.seed;
  spec.grid = rc.grid;
  ncc::McReport rep;
  try {
    rep = ncc::run_mc_experiment(spec);
  } catch (const std::domain_error& e) {
    throw ValidationFailure(e.what());
  }
  ncc::emit_report(rep, c.out);
  ncc::write_report_text(std::cout, rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  ncc::configure_workers_from_env();

  CLI::App app{"Nested case-control Cox model toolkit"};
  app.require_subcommand(1);

  Common sim, fit, bnd, ver, mc;
  std::string data;
  int directions = 20;
  ncc::SchemeOptions scheme;
  bool accept = false;

  auto* c_sim = app.add_subcommand("simulate", "simulate a dataset (config key n sets its size)");
  add_common(c_sim, sim, true);
  auto* c_fit = app.add_subcommand("fit", "MPLE and Breslow fit of a dataset");
  add_common(c_fit, fit, false);
  c_fit->add_option("--data", data, "dataset file")->required();
  auto* c_bnd = app.add_subcommand("bounds", "efficiency bounds and covariance table");
  add_common(c_bnd, bnd, true);
  auto* c_ver = app.add_subcommand("verify", "operator identity suite");
  add_common(c_ver, ver, true);
  c_ver->add_option("--directions", directions, "random directions per identity")->check(CLI::PositiveNumber);
  c_ver->add_option("--time-max", scheme.time_max, "upper end of the cumulative-hazard grid")
      ->check(CLI::PositiveNumber);
  c_ver->add_option("--refine", scheme.refine, "time panel refinement factor")->check(CLI::PositiveNumber);
  c_ver->add_option("--covariate-order", scheme.covariate_order, "covariate nodes (0 = automatic)")
      ->check(CLI::NonNegativeNumber);
  auto* c_mc = app.add_subcommand("mc", "Monte Carlo calibration experiment");
  add_common(c_mc, mc, true);
  c_mc->add_flag("--accept-warnings", accept, "run even if validation warns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_fit->parsed()) return cmd_fit(fit, data);
    if (c_bnd->parsed()) return cmd_bounds(bnd);
    if (c_ver->parsed()) return cmd_verify(ver, directions, scheme);
    if (c_mc->parsed()) return cmd_mc(mc, accept);
  } catch (const ValidationFailure& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ncc::ConfigError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
