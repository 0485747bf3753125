/*
 Copyright 2026 The mfstack Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <mfstack/config.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace mfstack {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& key, const std::string& s) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(out))
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& s) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + s + "'");
  return out;
}

std::vector<double> preset_args(const std::string& desc, std::size_t count) {
  const auto parts = split(desc, ':');
  if (parts.size() != count + 1) throw ConfigError("preset '" + desc + "' expects " + std::to_string(count) + " argument(s)");
  std::vector<double> args;
  for (std::size_t i = 1; i < parts.size(); ++i) args.push_back(to_double(parts[0], parts[i]));
  return args;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "xi_min", "xi_max", "T", "beta", "gamma", "n_xi", "n_t", "cfl", "max_iter", "rel_tol", "v0", "g0",
      "objective", "armijo.sigma_init", "armijo.shrink", "armijo.c1", "armijo.max_backtracks", "particles.n",
      "particles.seed", "particles.samples", "particles.xi0", "gradcheck.probes", "gradcheck.h", "sweep.beta",
      "sweep.gamma", "sweep.n_xi", "sweep.n_t", "output_dir"};
  return keys;
}

const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys = {"objective"};
  return keys;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& p : split(text, ',')) out.push_back(to_double("list", p));
  return out;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  if (trim(text).empty()) return out;
  for (const auto& p : split(text, ',')) out.push_back(Index(to_integer("list", p)));
  return out;
}

std::function<double(double)> control_preset(const std::string& desc) {
  const std::string name = desc.substr(0, desc.find(':'));
  if (desc == "linear") return [](double t) { return t; };
  if (desc == "zero") return [](double) { return 0.0; };
  if (desc == "desired") return [](double t) { return std::sin(2.0 * std::numbers::pi * t); };
  if (name == "constant") {
    const double c = preset_args(desc, 1)[0];
    return [c](double) { return c; };
  }
  if (name == "scaled_desired") {
    const double a = preset_args(desc, 1)[0];
    return [a](double t) { return a * std::sin(2.0 * std::numbers::pi * t); };
  }
  throw ConfigError("unknown v0 preset '" + desc + "'");
}

std::function<double(double)> density_preset(const std::string& desc) {
  const std::string name = desc.substr(0, desc.find(':'));
  if (desc == "uniform") return [](double) { return 1.0; };
  if (name == "indicator") {
    const auto a = preset_args(desc, 2);
    if (!(a[0] < a[1])) throw ConfigError("g0 indicator needs a < b");
    return [lo = a[0], hi = a[1]](double xi) { return (xi >= lo && xi <= hi) ? 1.0 : 0.0; };
  }
  if (name == "gaussian") {
    const auto a = preset_args(desc, 2);
    if (!(a[1] > 0.0)) throw ConfigError("g0 gaussian needs sigma > 0");
    return [mu = a[0], s = a[1]](double xi) { return std::exp(-0.5 * (xi - mu) * (xi - mu) / (s * s)); };
  }
  throw ConfigError("unknown g0 preset '" + desc + "'");
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto num = [&] { return to_double(key, value); };
  auto integer = [&] { return to_integer(key, value); };
  if (key == "xi_min") c.xi_min = num();
  else if (key == "xi_max") c.xi_max = num();
  else if (key == "T") c.T = num();
  else if (key == "beta") c.beta = num();
  else if (key == "gamma") c.gamma = num();
  else if (key == "n_xi") c.n_xi = Index(integer());
  else if (key == "n_t") c.n_t = Index(integer());
  else if (key == "cfl") c.cfl = num();
  else if (key == "max_iter") c.max_iter = int(integer());
  else if (key == "rel_tol") c.rel_tol = num();
  else if (key == "v0") { control_preset(value); c.v0 = value; }
  else if (key == "g0") { density_preset(value); c.g0 = value; }
  else if (key == "objective") {
    static const std::set<std::string> known = {"paper", "paper_no_moment_adjoint", "tracking_only", "flat_follower"};
    if (!known.contains(value)) throw ConfigError("unknown objective preset '" + value + "'");
    c.objective = value;
  }
  else if (key == "armijo.sigma_init") c.armijo.sigma_init = num();
  else if (key == "armijo.shrink") c.armijo.shrink = num();
  else if (key == "armijo.c1") c.armijo.c1 = num();
  else if (key == "armijo.max_backtracks") c.armijo.max_backtracks = int(integer());
  else if (key == "particles.n") {
    const auto n = integer();
    if (n < 0) throw ConfigError("particles.n must be non-negative");
    c.particles_n = Index(n);
  }
  else if (key == "particles.seed") c.particles_seed = to_u64(key, value);
  else if (key == "particles.samples") {
    const auto n = integer();
    if (n < 0) throw ConfigError("particles.samples must be non-negative");
    c.particles_samples = Index(n);
  }
  else if (key == "particles.xi0") c.particles_xi0 = parse_double_list(value);
  else if (key == "gradcheck.probes") {
    const auto n = integer();
    if (n < 0) throw ConfigError("gradcheck.probes must be non-negative");
    c.gradcheck_probes = int(n);
  }
  else if (key == "gradcheck.h") {
    c.gradcheck_h = num();
    if (!(c.gradcheck_h > 0.0)) throw ConfigError("gradcheck.h must be positive");
  }
  else if (key == "output_dir") c.output_dir = std::string(trim(value));
  else if (key == "sweep.beta") c.sweep_beta = parse_double_list(value);
  else if (key == "sweep.gamma") c.sweep_gamma = parse_double_list(value);
  else if (key == "sweep.n_xi") c.sweep_n_xi = parse_index_list(value);
  else if (key == "sweep.n_t") c.sweep_n_t = parse_index_list(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  for (const auto& key : required_config_keys())
    if (!seen.contains(key)) throw ConfigError("missing required config key '" + key + "'");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

ProblemSpec make_spec(const ExperimentConfig& cfg) { return make_spec(cfg, cfg.beta, cfg.gamma, cfg.n_xi, cfg.n_t); }

ProblemSpec make_spec(const ExperimentConfig& cfg, double beta, double gamma, Index n_xi, Index n_t) {
  ProblemSpec s = paper_spec(std::max<Index>(n_xi, 1));
  s.xi_min = cfg.xi_min;
  s.xi_max = cfg.xi_max;
  s.T = cfg.T;
  s.beta = beta;
  s.gamma = gamma;
  s.n_xi = n_xi;
  s.n_t = n_t;
  s.cfl = cfg.cfl;
  s.max_iter = cfg.max_iter;
  s.rel_tol = cfg.rel_tol.value_or(1.0 / (100.0 * double(std::max<Index>(n_xi, 1))));
  s.armijo = cfg.armijo;
  s.v0 = control_preset(cfg.v0);
  s.g0 = density_preset(cfg.g0);
  if (cfg.objective == "paper_no_moment_adjoint") {
    s.zero_moment_adjoint = true;
  } else if (cfg.objective == "tracking_only") {
    s.leader_obj = LeaderObjective::tracking_only();
  } else if (cfg.objective == "flat_follower") {
    s.moment = MomentMap::constant(1.0);
  }
  return s;
}

}  // namespace mfstack
