#include "ncc/sampler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "ncc/config_io.hpp"

namespace ncc {

Observation simulate_group(const ModelConfig& config, RngStream& rng, bool* tied) {
  const int eta = config.group_size.sample(rng);
  if (eta < config.m) throw ConfigError("simulate_group: drawn group size is smaller than m");

  std::vector<double> z(static_cast<std::size_t>(eta));
  int first = 0;
  double first_time = std::numeric_limits<double>::infinity();
  bool tie = false;
  for (int j = 0; j < eta; ++j) {
    z[static_cast<std::size_t>(j)] = config.covariate.sample(rng);
    // T = G^{-1}(U^{exp(-theta z)}), written through the cumulative hazard.
    const double u = rng.uniform_open();
    const double hazard_level = -std::log(u) * std::exp(-config.theta * z[static_cast<std::size_t>(j)]);
    const double t = config.baseline.inverse_cumulative_hazard(hazard_level);
    if (t < first_time) {
      first_time = t;
      first = j;
      tie = false;
    } else if (t == first_time) {
      tie = true;
    }
  }
  if (tied) *tied = tie;

  Observation obs;
  obs.eta = eta;
  obs.failure = first + 1;
  obs.time = first_time;

  std::vector<int> others;
  others.reserve(static_cast<std::size_t>(eta - 1));
  for (int j = 1; j <= eta; ++j) {
    if (j != obs.failure) others.push_back(j);
  }
  std::vector<int> controls;
  controls.reserve(static_cast<std::size_t>(config.m - 1));
  std::sample(others.begin(), others.end(), std::back_inserter(controls), config.m - 1, rng);

  obs.sampled = std::move(controls);
  obs.sampled.insert(std::lower_bound(obs.sampled.begin(), obs.sampled.end(), obs.failure), obs.failure);
  obs.covariates.reserve(obs.sampled.size());
  for (int label : obs.sampled) obs.covariates.push_back(z[static_cast<std::size_t>(label - 1)]);
  return obs;
}

Dataset simulate_dataset(const ModelConfig& config, std::size_t n, std::uint64_t seed, std::uint64_t replication,
                         Exec exec) {
  if (n == 0) throw std::invalid_argument("simulate_dataset: n must be >= 1");
  if (n > 0xffffffffULL) throw std::invalid_argument("simulate_dataset: n exceeds the stream-id range");
  if (config.m > config.group_size.min_size()) throw ConfigError("simulate_dataset: m exceeds a possible group size");

  Dataset ds;
  ds.config_fingerprint = config_fingerprint(config);
  ds.seed = seed;
  ds.observations.resize(n);
  std::vector<unsigned char> ties(n, 0);

  auto draw = [&](std::size_t g) {
    RngStream rng(seed, stream_id(replication, g));
    bool tied = false;
    ds.observations[g] = simulate_group(config, rng, &tied);
    ties[g] = tied ? 1 : 0;
  };
  if (exec == Exec::serial) {
    for (std::size_t g = 0; g < n; ++g) draw(g);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(n); ++g) draw(static_cast<std::size_t>(g));
  }
  ds.tie_count = static_cast<std::size_t>(std::count(ties.begin(), ties.end(), 1));
  return ds;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

template <class T>
T parse_number(const std::string& s, int lineno) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, int lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": bad real '" + s + "'");
  }
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& ds) {
  out << "# ncc-dataset v1\n";
  out << "# seed=" << ds.seed << " config=" << ds.config_fingerprint << " ties=" << ds.tie_count << "\n";
  std::string line;
  for (const Observation& o : ds.observations) {
    line.clear();
    line += std::to_string(o.eta);
    line += ',';
    line += std::to_string(o.failure);
    line += ',';
    for (std::size_t k = 0; k < o.sampled.size(); ++k) {
      if (k) line += ';';
      line += std::to_string(o.sampled[k]);
    }
    line += ',';
    append_double(line, o.time);
    line += ',';
    for (std::size_t k = 0; k < o.sampled.size(); ++k) {
      if (k) line += ';';
      line += std::to_string(o.sampled[k]);
      line += ':';
      append_double(line, o.covariates[k]);
    }
    line += '\n';
    out << line;
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "seed") ds.seed = parse_number<std::uint64_t>(val, lineno);
        if (key == "config") ds.config_fingerprint = parse_number<std::uint64_t>(val, lineno);
        if (key == "ties") ds.tie_count = parse_number<std::size_t>(val, lineno);
      }
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 5) {
      throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": expected 5 fields eta,i,r,t,z_r");
    }
    Observation o;
    o.eta = parse_number<int>(fields[0], lineno);
    o.failure = parse_number<int>(fields[1], lineno);
    for (const auto& s : split(fields[2], ';')) o.sampled.push_back(parse_number<int>(s, lineno));
    o.time = parse_real(fields[3], lineno);
    const auto pairs = split(fields[4], ';');
    if (pairs.size() != o.sampled.size()) {
      throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": z_r does not match r");
    }
    o.covariates.resize(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto colon = pairs[k].find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": z_r entries must be label:value");
      }
      const int label = parse_number<int>(pairs[k].substr(0, colon), lineno);
      if (label != o.sampled[k]) {
        throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": z_r labels must follow r");
      }
      o.covariates[k] = parse_real(pairs[k].substr(colon + 1), lineno);
    }
    try {
      o.check_structure();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    ds.observations.push_back(std::move(o));
  }
  return ds;
}

std::string serialize_dataset(const Dataset& dataset) {
  std::ostringstream os;
  write_dataset(os, dataset);
  return os.str();
}

Dataset parse_dataset(const std::string& text) {
  std::istringstream is(text);
  return read_dataset(is);
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_dataset(out, dataset);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path + "'");
  return read_dataset(in);
}

// ---------------------------------------------------------------------------
// Goodness of fit

double kolmogorov_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double GofReport::min_p_value() const {
  return std::min({ks_p_value, eta_p_value, failure_mean_p_value, failure_second_moment_p_value, control_mean_p_value,
                   control_second_moment_p_value});
}

namespace {

// Two-sided z-test that the sample mean of `xs` equals `mean`, with known
// variance `var` of a single draw.
double z_test(const std::vector<double>& xs, double mean, double var) {
  if (xs.empty()) return 1.0;
  const double avg = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  const double z = (avg - mean) / std::sqrt(var / static_cast<double>(xs.size()));
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), std::abs(z)));
}

// Fourth central moment of h, used for the variance of squared deviations.
double fourth_central_moment(const CovariateLaw& h) {
  const auto rule = h.quadrature(64);
  const double mu = h.mean();
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) acc += rule.weights[k] * std::pow(rule.nodes[k] - mu, 4);
  return acc;
}

}  // namespace

GofReport goodness_of_fit_check(const Dataset& dataset, const ModelConfig& config) {
  if (dataset.empty()) throw std::invalid_argument("goodness_of_fit_check: empty dataset");
  GofReport r;
  r.n = dataset.size();
  r.tie_count = dataset.tie_count;

  std::vector<double> times;
  times.reserve(r.n);
  for (const auto& o : dataset.observations) times.push_back(o.time);
  std::sort(times.begin(), times.end());
  const auto& pmf = config.group_size;
  double d = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double s = config.baseline.survival(times[k]);
    const double cdf = 1.0 - pmf.expect([s](int eta) { return std::pow(s, eta); });
    const double lo = static_cast<double>(k) / static_cast<double>(r.n);
    const double hi = static_cast<double>(k + 1) / static_cast<double>(r.n);
    d = std::max({d, std::abs(cdf - lo), std::abs(hi - cdf)});
  }
  r.ks_statistic = d;
  r.ks_p_value = kolmogorov_p_value(d, r.n);

  // Group sizes outside the support land in an overflow cell.
  std::vector<double> counts(pmf.support().size(), 0.0);
  std::size_t outside = 0;
  for (const auto& o : dataset.observations) {
    const auto it = std::lower_bound(pmf.support().begin(), pmf.support().end(), o.eta);
    if (it == pmf.support().end() || *it != o.eta) {
      ++outside;
    } else {
      counts[static_cast<std::size_t>(it - pmf.support().begin())] += 1.0;
    }
  }
  if (outside > 0) {
    r.eta_chi_square = std::numeric_limits<double>::infinity();
    r.eta_df = static_cast<double>(counts.size());
    r.eta_p_value = 0.0;
  } else if (counts.size() > 1) {
    double chi = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const double expected = static_cast<double>(r.n) * pmf.probabilities()[k];
      chi += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    r.eta_chi_square = chi;
    r.eta_df = static_cast<double>(counts.size() - 1);
    r.eta_p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.eta_df), chi));
  } else {
    r.eta_p_value = 1.0;
  }

  std::vector<double> fail_z;
  std::vector<double> fail_sq;
  std::vector<double> ctrl_z;
  std::vector<double> ctrl_sq;
  const double mu = config.covariate.mean();
  for (const auto& o : dataset.observations) {
    for (std::size_t k = 0; k < o.sampled.size(); ++k) {
      const double z = o.covariates[k];
      const double dev2 = (z - mu) * (z - mu);
      if (o.sampled[k] == o.failure) {
        fail_z.push_back(z);
        fail_sq.push_back(dev2);
      } else {
        ctrl_z.push_back(z);
        ctrl_sq.push_back(dev2);
      }
    }
  }
  const double var = config.covariate.variance();
  const double var_sq = fourth_central_moment(config.covariate) - var * var;
  r.failure_mean_p_value = z_test(fail_z, mu, var);
  r.failure_second_moment_p_value = z_test(fail_sq, var, var_sq);
  r.control_mean_p_value = z_test(ctrl_z, mu, var);
  r.control_second_moment_p_value = z_test(ctrl_sq, var, var_sq);
  return r;
}

}  // namespace ncc
