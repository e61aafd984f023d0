#include "ncc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ncc/bounds.hpp"
#include "ncc/config_io.hpp"
#include "ncc/estimators.hpp"
#include "ncc/sampler.hpp"

namespace ncc {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t time_index(const std::vector<double>& times, double t) {
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

}  // namespace

McReport run_mc_experiment(const ExperimentSpec& spec) {
  if (spec.n == 0) throw std::invalid_argument("run_mc_experiment: n must be >= 1");
  if (spec.replications == 0) throw std::invalid_argument("run_mc_experiment: replications must be >= 1");
  if (spec.config.m < 2) throw ConfigError("run_mc_experiment: estimation needs m >= 2");
  const BoundsInput bin = BoundsInput::from_config(spec.config);

  McReport rep;
  rep.n = spec.n;
  rep.replications = spec.replications;
  rep.seed = spec.seed;
  rep.config_fingerprint = config_fingerprint(spec.config);
  rep.theta0 = spec.config.theta;
  rep.grid_pairs = spec.grid;
  for (const auto& [s, t] : spec.grid) {
    if (s < 0.0 || t < 0.0 || std::max(s, t) > spec.config.baseline.horizon()) {
      throw std::domain_error("run_mc_experiment: grid point outside [0, horizon]");
    }
    rep.grid_times.push_back(s);
    rep.grid_times.push_back(t);
  }
  std::sort(rep.grid_times.begin(), rep.grid_times.end());
  rep.grid_times.erase(std::unique(rep.grid_times.begin(), rep.grid_times.end()), rep.grid_times.end());

  rep.rows.resize(spec.replications);
  std::exception_ptr error;
  auto one = [&](std::size_t r) {
    ReplicationRow& row = rep.rows[r];
    row.replication = r;
    try {
      const Dataset ds = simulate_dataset(spec.config, spec.n, spec.seed, r, Exec::serial);
      SolverOptions opt;
      opt.exec = Exec::serial;
      try {
        const MpleFit fit = fit_mple(ds, opt);
        row.theta_hat = fit.theta_hat;
        row.standard_error = fit.standard_error;
        row.iterations = fit.iterations;
        const BreslowFit b = breslow(ds, fit.theta_hat);
        for (double t : rep.grid_times) row.survival.push_back(b.survival(t));
      } catch (const SeparationError&) {
        row.status = "separated";
      } catch (const DegenerateLikelihoodError&) {
        row.status = "degenerate";
      }
      if (!row.ok()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.theta_hat = row.standard_error = nan;
        row.survival.assign(rep.grid_times.size(), nan);
      }
    } catch (...) {
#pragma omp critical(ncc_mc_error)
      if (!error) error = std::current_exception();
    }
  };
  if (spec.exec == Exec::serial) {
    for (std::size_t r = 0; r < spec.replications; ++r) one(r);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(spec.replications); ++r) one(static_cast<std::size_t>(r));
  }
  if (error) std::rethrow_exception(error);

  rep.sigma2_mple = mple_asymptotic_variance(spec.config.m, bin.var_z);
  rep.inverse_information = 1.0 / effective_information(bin);
  rep.inverse_information_limit = 1.0 / effective_information_limit(spec.config.m, bin.var_z);
  for (const auto& [s, t] : spec.grid) {
    GridComparison g;
    g.s = s;
    g.t = t;
    g.kstar = survival_bound_kstar(s, t, bin);
    g.omega = breslow_covariance_omega(s, t, bin);
    rep.grid.push_back(g);
  }
  recompute_aggregates(rep);
  return rep;
}

void recompute_aggregates(McReport& rep) {
  const double n = static_cast<double>(rep.n);
  rep.used = 0;
  double sum = 0.0;
  for (const auto& row : rep.rows) {
    if (!row.ok()) continue;
    ++rep.used;
    sum += row.theta_hat;
  }
  rep.failed = rep.rows.size() - rep.used;
  rep.separation_flag = static_cast<double>(rep.failed) > 0.01 * static_cast<double>(rep.rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (rep.used == 0) {
    rep.mean_theta_hat = rep.mean_scaled_error = rep.scaled_variance = nan;
    for (auto& g : rep.grid) g.empirical = nan;
    return;
  }
  const double used = static_cast<double>(rep.used);
  rep.mean_theta_hat = sum / used;
  rep.mean_scaled_error = std::sqrt(n) * (rep.mean_theta_hat - rep.theta0);
  double ss = 0.0;
  for (const auto& row : rep.rows) {
    if (row.ok()) ss += (row.theta_hat - rep.mean_theta_hat) * (row.theta_hat - rep.mean_theta_hat);
  }
  rep.scaled_variance = rep.used > 1 ? n * ss / (used - 1.0) : nan;

  std::vector<double> mean(rep.grid_times.size(), 0.0);
  for (const auto& row : rep.rows) {
    if (!row.ok()) continue;
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row.survival[k];
  }
  for (double& v : mean) v /= used;
  for (auto& g : rep.grid) {
    const std::size_t is = time_index(rep.grid_times, g.s);
    const std::size_t it = time_index(rep.grid_times, g.t);
    double acc = 0.0;
    for (const auto& row : rep.rows) {
      if (row.ok()) acc += (row.survival[is] - mean[is]) * (row.survival[it] - mean[it]);
    }
    g.empirical = rep.used > 1 ? n * acc / (used - 1.0) : nan;
  }
}

void write_report_csv(std::ostream& out, const McReport& rep) {
  out << "# ncc-mc v1\n";
  out << "# seed=" << rep.seed << " config=" << rep.config_fingerprint << " n=" << rep.n
      << " replications=" << rep.replications << "\n";
  out << "replication,status,theta_hat,standard_error,iterations";
  for (std::size_t k = 0; k < rep.grid_times.size(); ++k) out << ",survival_" << k;
  out << '\n';
  for (const auto& row : rep.rows) {
    out << row.replication << ',' << row.status << ',' << fmt17(row.theta_hat) << ',' << fmt17(row.standard_error) << ','
        << row.iterations;
    for (double v : row.survival) out << ',' << fmt17(v);
    out << '\n';
  }
  out << "# summary\nkey,value\n";
  auto kv = [&](const std::string& key, double v) { out << key << ',' << fmt17(v) << '\n'; };
  out << "n," << rep.n << '\n';
  out << "replications," << rep.replications << '\n';
  out << "seed," << rep.seed << '\n';
  kv("theta0", rep.theta0);
  out << "used," << rep.used << '\n';
  out << "failed," << rep.failed << '\n';
  out << "separation_flag," << (rep.separation_flag ? 1 : 0) << '\n';
  kv("mean_theta_hat", rep.mean_theta_hat);
  kv("mean_scaled_error", rep.mean_scaled_error);
  kv("scaled_variance", rep.scaled_variance);
  kv("sigma2_mple", rep.sigma2_mple);
  kv("inverse_information", rep.inverse_information);
  kv("inverse_information_limit", rep.inverse_information_limit);
  for (std::size_t k = 0; k < rep.grid_times.size(); ++k) kv("grid_time_" + std::to_string(k), rep.grid_times[k]);
  for (std::size_t j = 0; j < rep.grid.size(); ++j) {
    const std::string p = "cov_" + std::to_string(j) + "_";
    kv(p + "s", rep.grid[j].s);
    kv(p + "t", rep.grid[j].t);
    kv(p + "empirical", rep.grid[j].empirical);
    kv(p + "kstar", rep.grid[j].kstar);
    kv(p + "omega", rep.grid[j].omega);
  }
}

void write_report_text(std::ostream& out, const McReport& rep) {
  char buf[200];
  out << "Monte Carlo summary\n";
  std::snprintf(buf, sizeof buf, "  n = %zu, replications = %zu (used %zu, failed %zu%s), seed = %llu\n", rep.n,
                rep.replications, rep.used, rep.failed, rep.separation_flag ? ", FLAGGED" : "",
                static_cast<unsigned long long>(rep.seed));
  out << buf;
  std::snprintf(buf, sizeof buf, "  theta0 = %.6g, mean theta_hat = %.6g\n", rep.theta0, rep.mean_theta_hat);
  out << buf;
  out << "\nVariance of sqrt(n)(theta_hat - theta0)\n";
  std::snprintf(buf, sizeof buf, "  %-34s %10.6f\n", "empirical n Var(theta_hat)", rep.scaled_variance);
  out << buf;
  std::snprintf(buf, sizeof buf, "  %-34s %10.6f\n", "sigma^2 MPLE", rep.sigma2_mple);
  out << buf;
  std::snprintf(buf, sizeof buf, "  %-34s %10.6f\n", "bound 1/I* (finite eta)", rep.inverse_information);
  out << buf;
  std::snprintf(buf, sizeof buf, "  %-34s %10.6f\n", "bound 1/I* (limit)", rep.inverse_information_limit);
  out << buf;
  if (!rep.grid.empty()) {
    out << "\nBreslow survival covariance, n Cov(G_hat(s), G_hat(t))\n";
    std::snprintf(buf, sizeof buf, "  %8s %8s %12s %12s %12s\n", "s", "t", "empirical", "K*", "omega");
    out << buf;
    for (const auto& g : rep.grid) {
      std::snprintf(buf, sizeof buf, "  %8.4g %8.4g %12.6f %12.6f %12.6f\n", g.s, g.t, g.empirical, g.kstar, g.omega);
      out << buf;
    }
  }
}

McReport read_report_csv(std::istream& in) {
  McReport rep;
  std::string line;
  bool summary = false;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "# summary") {
      summary = true;
      continue;
    }
    if (line[0] == '#') {
      const auto at = line.find(" config=");
      if (at != std::string::npos) rep.config_fingerprint = std::stoull(line.substr(at + 8));
      continue;
    }
    if (line.rfind("replication,", 0) == 0 || line == "key,value") continue;
    const auto cells = split_csv(line);
    if (summary) {
      if (cells.size() != 2) throw std::invalid_argument("report summary rows must be key,value");
      kv[cells[0]] = cells[1];
      continue;
    }
    if (cells.size() < 5) throw std::invalid_argument("report row has too few columns");
    ReplicationRow row;
    row.replication = std::stoull(cells[0]);
    row.status = cells[1];
    row.theta_hat = parse_real(cells[2]);
    row.standard_error = parse_real(cells[3]);
    row.iterations = std::stoi(cells[4]);
    for (std::size_t k = 5; k < cells.size(); ++k) row.survival.push_back(parse_real(cells[k]));
    rep.rows.push_back(std::move(row));
  }
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("report summary lacks '" + key + "'");
    return it->second;
  };
  rep.n = std::stoull(get("n"));
  rep.replications = std::stoull(get("replications"));
  rep.seed = std::stoull(get("seed"));
  rep.theta0 = parse_real(get("theta0"));
  rep.used = std::stoull(get("used"));
  rep.failed = std::stoull(get("failed"));
  rep.separation_flag = get("separation_flag") == "1";
  rep.mean_theta_hat = parse_real(get("mean_theta_hat"));
  rep.mean_scaled_error = parse_real(get("mean_scaled_error"));
  rep.scaled_variance = parse_real(get("scaled_variance"));
  rep.sigma2_mple = parse_real(get("sigma2_mple"));
  rep.inverse_information = parse_real(get("inverse_information"));
  rep.inverse_information_limit = parse_real(get("inverse_information_limit"));
  for (std::size_t k = 0; kv.count("grid_time_" + std::to_string(k)); ++k) {
    rep.grid_times.push_back(parse_real(get("grid_time_" + std::to_string(k))));
  }
  for (std::size_t j = 0; kv.count("cov_" + std::to_string(j) + "_s"); ++j) {
    const std::string p = "cov_" + std::to_string(j) + "_";
    GridComparison g;
    g.s = parse_real(get(p + "s"));
    g.t = parse_real(get(p + "t"));
    g.empirical = parse_real(get(p + "empirical"));
    g.kstar = parse_real(get(p + "kstar"));
    g.omega = parse_real(get(p + "omega"));
    rep.grid.push_back(g);
    rep.grid_pairs.emplace_back(g.s, g.t);
  }
  return rep;
}

void emit_report(const McReport& rep, const std::string& dir) {
  if (rep.rows.empty()) throw std::invalid_argument("emit_report: report has no replications");
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::string& name, auto&& body) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
  };
  write("mc.csv", [&](std::ostream& o) { write_report_csv(o, rep); });
  write("mc_summary.txt", [&](std::ostream& o) { write_report_text(o, rep); });
}

}  // namespace ncc
