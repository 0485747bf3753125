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

// Command-line front end: solve, particles, gradcheck, sweep.

#include <mfstack/experiments.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Overrides {
  std::string config;
  std::string out;
  int jobs{1};
  std::optional<std::uint64_t> seed;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<long> n_xi;
  std::vector<long> n_t;
  std::optional<int> probes;
  std::optional<double> h;
  std::optional<long> samples;
  std::optional<long> n;
  std::vector<std::string> set;
};

std::vector<mfstack::Index> to_index(const std::vector<long>& v) { return {v.begin(), v.end()}; }

mfstack::ExperimentConfig build_config(const Overrides& o, const std::string& command) {
  using namespace mfstack;
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.particles_seed = *o.seed;
  if (o.probes) cfg.gradcheck_probes = *o.probes;
  if (o.h) cfg.gradcheck_h = *o.h;
  if (o.samples) cfg.particles_samples = *o.samples;
  if (o.n) cfg.particles_n = *o.n;
  if (command == "sweep") {
    if (!o.beta.empty()) cfg.sweep_beta = o.beta;
    if (!o.gamma.empty()) cfg.sweep_gamma = o.gamma;
    if (!o.n_xi.empty()) cfg.sweep_n_xi = to_index(o.n_xi);
    if (!o.n_t.empty()) cfg.sweep_n_t = to_index(o.n_t);
  } else {
    auto single = [](const auto& v, const char* flag) {
      if (v.size() > 1) throw ConfigError(std::string(flag) + " takes a single value outside sweep");
    };
    single(o.beta, "--beta");
    single(o.gamma, "--gamma");
    single(o.n_xi, "--n-xi");
    single(o.n_t, "--n-t");
    if (!o.beta.empty()) cfg.beta = o.beta[0];
    if (!o.gamma.empty()) cfg.gamma = o.gamma[0];
    if (!o.n_xi.empty()) cfg.n_xi = o.n_xi[0];
    if (!o.n_t.empty()) cfg.n_t = o.n_t[0];
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-quadratic mean-field Stackelberg solver"};
  app.footer(mfstack::artifact_documentation());
  app.require_subcommand(1);

  Overrides o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "key = value configuration file");
    sub->add_option("-o,--out", o.out, "output directory (default: output_dir key, else ./out)");
    sub->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "particle sampling seed");
    sub->add_option("--set", o.set, "override a configuration key (key=value), repeatable");
    sub->add_option("--beta", o.beta, "leader control penalty")->delimiter(',');
    sub->add_option("--gamma", o.gamma, "follower control penalty")->delimiter(',');
    sub->add_option("--n-xi", o.n_xi, "spatial cells")->delimiter(',');
    sub->add_option("--n-t", o.n_t, "output time points")->delimiter(',');
  };

  auto* solve = app.add_subcommand("solve", "optimize the leader control and write the cascade fields");
  common(solve);
  auto* particles = app.add_subcommand("particles", "check the PDE solution against individual followers");
  common(particles);
  particles->add_option("--samples", o.samples, "followers for the consistency residual");
  particles->add_option("--n", o.n, "particles for the density gap");
  auto* gradcheck = app.add_subcommand("gradcheck", "compare the adjoint direction with finite differences");
  common(gradcheck);
  gradcheck->add_option("--probes", o.probes, "number of probed time indices");
  gradcheck->add_option("--step", o.h, "finite-difference step h");
  auto* sweep = app.add_subcommand("sweep", "optimize over the Cartesian product of beta, gamma, n_xi");
  common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mfstack::exit_code::config_error;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  mfstack::ExperimentConfig cfg;
  try {
    cfg = build_config(o, command);
  } catch (const mfstack::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfstack::exit_code::config_error;
  }

  const std::string out = !o.out.empty() ? o.out : cfg.output_dir.value_or("out");
  const mfstack::RunOptions run{out, o.jobs, &std::cout};
  try {
    if (command == "solve") return mfstack::cmd_solve(cfg, run);
    if (command == "particles") return mfstack::cmd_particles(cfg, run);
    if (command == "gradcheck") return mfstack::cmd_gradcheck(cfg, run);
    return mfstack::cmd_sweep(cfg, run);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mfstack::exit_code::solver_error;
  }
}
