#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncc/model.hpp"
#include "ncc/parallel.hpp"
#include "ncc/rng.hpp"

namespace ncc {

/// n i.i.d. stratum records with their provenance.
struct Dataset {
  std::vector<Observation> observations;
  std::uint64_t config_fingerprint = 0;
  std::uint64_t seed = 0;
  /// Strata whose minimum lifetime was tied (broken by lowest label).
  std::size_t tie_count = 0;

  [[nodiscard]] std::size_t size() const { return observations.size(); }
  [[nodiscard]] bool empty() const { return observations.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Simulates one stratum to its first failure and samples m - 1 controls.
/// Sets *tied when the minimum lifetime was not unique.
Observation simulate_group(const ModelConfig& config, RngStream& rng, bool* tied = nullptr);

/// n strata from streams (seed, stream_id(replication, g)), g = 0..n-1.
/// Output is identical for both execution paths and any thread count.
Dataset simulate_dataset(const ModelConfig& config, std::size_t n, std::uint64_t seed,
                         std::uint64_t replication = 0, Exec exec = Exec::parallel);

// Serialization: '#' header lines, then one record per line
//   eta,i,r,t,z_r
// with r as ';'-separated labels and z_r as ';'-separated label:value pairs,
// floats printed with 17 significant digits.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
std::string serialize_dataset(const Dataset& dataset);
Dataset parse_dataset(const std::string& text);
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

struct GofReport {
  std::size_t n = 0;
  /// Failure times against 1 - E[G(t)^eta].
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  /// Group size frequencies against the configured pmf.
  double eta_chi_square = 0.0;
  double eta_df = 0.0;
  double eta_p_value = 0.0;
  /// z-tests of the failure covariates' mean and second moment against h.
  double failure_mean_p_value = 0.0;
  double failure_second_moment_p_value = 0.0;
  /// Same for the control covariates.
  double control_mean_p_value = 0.0;
  double control_second_moment_p_value = 0.0;
  std::size_t tie_count = 0;

  [[nodiscard]] double min_p_value() const;
};

/// Calibration checks of a null (theta = 0) dataset against its config.
GofReport goodness_of_fit_check(const Dataset& dataset, const ModelConfig& config);

/// Asymptotic Kolmogorov distribution tail P(sqrt(n) D > lambda) with the
/// usual small-sample correction.
double kolmogorov_p_value(double d, std::size_t n);

}  // namespace ncc
