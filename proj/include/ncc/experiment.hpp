#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ncc/model.hpp"
#include "ncc/parallel.hpp"

namespace ncc {

struct ExperimentSpec {
  ModelConfig config;
  std::size_t n = 1000;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  /// (s, t) points for the Breslow covariance comparison.
  std::vector<std::pair<double, double>> grid;
  Exec exec = Exec::parallel;
};

struct ReplicationRow {
  std::size_t replication = 0;
  /// "ok", "separated" or "degenerate".
  std::string status = "ok";
  double theta_hat = 0.0;
  double standard_error = 0.0;
  int iterations = 0;
  /// Breslow survival at McReport::grid_times.
  std::vector<double> survival;

  [[nodiscard]] bool ok() const { return status == "ok"; }
};

struct GridComparison {
  double s = 0.0;
  double t = 0.0;
  /// n Cov(G_hat(s), G_hat(t)) across replications.
  double empirical = 0.0;
  double kstar = 0.0;
  double omega = 0.0;
};

struct McReport {
  std::size_t n = 0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  double theta0 = 0.0;
  std::vector<double> grid_times;
  std::vector<std::pair<double, double>> grid_pairs;
  std::vector<ReplicationRow> rows;

  // Aggregates over rows with status ok.
  std::size_t used = 0;
  std::size_t failed = 0;
  bool separation_flag = false;  ///< more than 1% of replications failed
  double mean_theta_hat = 0.0;
  double mean_scaled_error = 0.0;  ///< mean of sqrt(n)(theta_hat - theta0)
  double scaled_variance = 0.0;    ///< n Var(theta_hat)

  // Bounds.
  double sigma2_mple = 0.0;
  double inverse_information = 0.0;        ///< 1 / I*rho (finite eta)
  double inverse_information_limit = 0.0;  ///< 1 / I* (limit)
  std::vector<GridComparison> grid;
};

/// Simulates, fits and runs Breslow for each replication. Replication r
/// uses streams (seed, stream_id(r, g)); rows are ordered by r.
McReport run_mc_experiment(const ExperimentSpec& spec);

/// Recomputes the aggregate statistics of `report` from its rows.
void recompute_aggregates(McReport& report);

/// One row per replication, then a "# summary" block of key,value rows.
void write_report_csv(std::ostream& out, const McReport& report);
/// Human-readable summary with the bound comparison table.
void write_report_text(std::ostream& out, const McReport& report);
/// Parses write_report_csv output.
McReport read_report_csv(std::istream& in);

/// Writes mc.csv and mc_summary.txt under `dir`. Throws for an empty report.
void emit_report(const McReport& report, const std::string& dir);

}  // namespace ncc
