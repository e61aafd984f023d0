#include "ncc/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ncc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

namespace {

const std::set<std::string> kModelKeys = {"baseline", "weibull_shape", "horizon", "covariate", "covariate_bound",
                                          "moment_radius", "eta", "m", "theta", "xi", "theta_xi"};
const std::set<std::string> kRunKeys = {"n", "replications", "grid"};

std::size_t to_count(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (!(d >= 1.0) || d != std::floor(d) || d > 1e15) throw ConfigError("config: '" + key + "' must be a positive integer");
  return static_cast<std::size_t>(d);
}

ModelConfig model_from_keys(const std::map<std::string, std::string>& kv, bool allow_run_keys) {
  for (const auto& [k, v] : kv) {
    if (!kModelKeys.count(k) && !(allow_run_keys && kRunKeys.count(k))) {
      throw ConfigError("config: unknown key '" + k + "'");
    }
  }
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };

  ModelConfig c;
  const std::string baseline = get("baseline") ? *get("baseline") : "exponential";
  if (baseline == "exponential") {
    c.baseline = Baseline::exponential();
  } else if (baseline == "weibull") {
    if (!get("weibull_shape")) throw ConfigError("config: weibull baseline needs weibull_shape");
    c.baseline = Baseline::weibull(to_double("weibull_shape", *get("weibull_shape")));
  } else {
    throw ConfigError("config: unknown baseline '" + baseline + "'");
  }
  if (get("horizon")) c.baseline = c.baseline.with_horizon(to_double("horizon", *get("horizon")));

  const std::string cov = get("covariate") ? *get("covariate") : "normal";
  if (cov == "normal") {
    c.covariate = CovariateLaw::standard_normal(get("moment_radius") ? to_double("moment_radius", *get("moment_radius"))
                                                                     : CovariateLaw::kNormalRadiusCap);
  } else if (cov == "truncated_normal") {
    if (!get("covariate_bound")) throw ConfigError("config: truncated_normal needs covariate_bound");
    c.covariate = CovariateLaw::truncated_normal(to_double("covariate_bound", *get("covariate_bound")));
  } else if (cov == "uniform") {
    c.covariate = CovariateLaw::uniform();
  } else {
    throw ConfigError("config: unknown covariate law '" + cov + "'");
  }

  if (!get("eta")) throw ConfigError("config: missing 'eta'");
  std::vector<std::pair<int, double>> pmf;
  try {
    const auto j = nlohmann::json::parse(*get("eta"));
    if (j.is_number_integer()) {
      pmf.emplace_back(j.get<int>(), 1.0);
    } else {
      for (const auto& row : j) {
        if (!row.is_array() || row.size() != 2) throw ConfigError("config: eta rows must be [size, probability]");
        pmf.emplace_back(row.at(0).get<int>(), row.at(1).get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: cannot parse eta: ") + e.what());
  }
  c.group_size = GroupSizeDistribution(std::move(pmf));

  if (!get("m")) throw ConfigError("config: missing 'm'");
  const double m = to_double("m", *get("m"));
  if (m != static_cast<int>(m)) throw ConfigError("config: m must be an integer");
  c.m = static_cast<int>(m);
  if (get("theta")) c.theta = to_double("theta", *get("theta"));
  if (get("xi")) c.xi = to_double("xi", *get("xi"));
  if (get("theta_xi")) c.theta_xi = to_double("theta_xi", *get("theta_xi"));
  return c;
}

}  // namespace

ModelConfig parse_model_config(std::istream& in) { return model_from_keys(read_key_values(in), false); }

RunConfig parse_run_config(std::istream& in) {
  const auto kv = read_key_values(in);
  RunConfig rc;
  rc.model = model_from_keys(kv, true);
  if (const auto it = kv.find("n"); it != kv.end()) rc.n = to_count("n", it->second);
  if (const auto it = kv.find("replications"); it != kv.end()) rc.replications = to_count("replications", it->second);
  if (const auto it = kv.find("grid"); it != kv.end()) {
    try {
      for (const auto& row : nlohmann::json::parse(it->second)) {
        if (row.is_number()) {
          rc.grid.emplace_back(row.get<double>(), row.get<double>());
        } else if (row.is_array() && row.size() == 2) {
          rc.grid.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
        } else {
          throw ConfigError("config: grid entries must be times or [s, t] pairs");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: cannot parse grid: ") + e.what());
    }
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_run_config(in);
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_model_config(in);
}

std::string format_model_config(const ModelConfig& c) {
  std::ostringstream os;
  if (c.baseline.kind() == Baseline::Kind::exponential) {
    os << "baseline = exponential\n";
  } else {
    os << "baseline = weibull\nweibull_shape = " << fmt17(c.baseline.shape()) << "\n";
  }
  os << "horizon = " << fmt17(c.baseline.horizon()) << "\n";
  switch (c.covariate.kind()) {
    case CovariateLaw::Kind::normal:
      os << "covariate = normal\nmoment_radius = " << fmt17(c.covariate.moment_radius()) << "\n";
      break;
    case CovariateLaw::Kind::truncated_normal:
      os << "covariate = truncated_normal\ncovariate_bound = " << fmt17(c.covariate.bound()) << "\n";
      break;
    case CovariateLaw::Kind::uniform:
      os << "covariate = uniform\n";
      break;
  }
  nlohmann::json eta = nlohmann::json::array();
  for (std::size_t k = 0; k < c.group_size.support().size(); ++k) {
    eta.push_back({c.group_size.support()[k], c.group_size.probabilities()[k]});
  }
  os << "eta = " << eta.dump() << "\n";
  os << "m = " << c.m << "\n";
  os << "theta = " << fmt17(c.theta) << "\n";
  if (std::isfinite(c.xi)) os << "xi = " << fmt17(c.xi) << "\n";
  if (c.theta_xi != 0.0) os << "theta_xi = " << fmt17(c.theta_xi) << "\n";
  return os.str();
}

std::uint64_t config_fingerprint(const ModelConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : format_model_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ncc
