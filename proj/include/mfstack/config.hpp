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

#pragma once

// Flat `key = value` experiment configuration.

#include <mfstack/problem.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mfstack {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  double xi_min{0.0};
  double xi_max{2.0};
  double T{1.0};
  double beta{1.0};
  double gamma{1.0};
  Index n_xi{500};
  Index n_t{100};
  double cfl{0.95};
  int max_iter{100};
  /// Unset means 1/(100 n_xi), re-derived for every grid in a sweep.
  std::optional<double> rel_tol;
  std::string v0{"linear"};
  std::string g0{"indicator:0.5:1.5"};
  std::string objective{"paper"};
  ArmijoConfig armijo;

  Index particles_n{10000};
  std::uint64_t particles_seed{1};
  Index particles_samples{100};
  std::vector<double> particles_xi0;

  int gradcheck_probes{10};
  double gradcheck_h{1e-4};

  std::vector<double> sweep_beta;
  std::vector<double> sweep_gamma;
  std::vector<Index> sweep_n_xi;
  std::vector<Index> sweep_n_t;

  std::optional<std::string> output_dir;
};

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Keys that must appear in every config file.
const std::vector<std::string>& required_config_keys();

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` assignment; throws ConfigError on unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

std::vector<double> parse_double_list(const std::string& text);
std::vector<Index> parse_index_list(const std::string& text);

/// Problem instance for the config, optionally at another resolution or regularization.
ProblemSpec make_spec(const ExperimentConfig& cfg);
ProblemSpec make_spec(const ExperimentConfig& cfg, double beta, double gamma, Index n_xi, Index n_t);

std::function<double(double)> control_preset(const std::string& desc);
std::function<double(double)> density_preset(const std::string& desc);

}  // namespace mfstack
