#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ncc/model.hpp"

namespace ncc {

/// Reads `key = value` lines ('#' starts a comment). Recognised keys:
///
///   baseline        exponential | weibull
///   weibull_shape   shape k of Weibull(k, 1)
///   horizon         evaluation horizon T0 (default: cumulative hazard 8)
///   covariate       normal | truncated_normal | uniform
///   covariate_bound c for truncated_normal on [-c, c]
///   moment_radius   theta_kappa cap for the normal law (default 2)
///   eta             group size pmf, e.g. [[3,0.5],[5,0.5]]
///   m               sampled set size
///   theta           true relative-risk parameter
///   xi, theta_xi    covariate parameter-space constants (reported only)
///
/// Unknown keys raise ConfigError.
ModelConfig parse_model_config(std::istream& in);
ModelConfig load_model_config(const std::string& path);

/// Canonical text form; parse_model_config(format_model_config(c)) == c.
std::string format_model_config(const ModelConfig& config);

/// FNV-1a hash of the canonical text form.
std::uint64_t config_fingerprint(const ModelConfig& config);

/// Model keys plus the run keys used by the command-line tool:
///
///   n               groups per dataset
///   replications    Monte Carlo replications
///   grid            (s, t) evaluation points, e.g. [[1,1],[0.5,1]] or [0.5,1]
///                   (a bare time t stands for the pair (t, t))
struct RunConfig {
  ModelConfig model;
  std::size_t n = 1000;
  std::size_t replications = 100;
  std::vector<std::pair<double, double>> grid;
};

RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

/// Raw key/value pairs of a config stream, for tools that add their own keys.
std::map<std::string, std::string> read_key_values(std::istream& in);

}  // namespace ncc
