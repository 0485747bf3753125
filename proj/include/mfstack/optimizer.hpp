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

// Outer gradient loop on the leader control: cascade sweep, descent
// direction, Armijo backtracking, relative-change termination.

#include <mfstack/cascade.hpp>
#include <mfstack/problem.hpp>

#include <functional>
#include <string>
#include <vector>

namespace mfstack {

enum class OptimizeStatus { converged, max_iter, line_search_failed, solver_error };

std::string to_string(OptimizeStatus s);

struct IterationRecord {
  int iter{0};
  double objective{0.0};  ///< leader objective after the update
  double step_size{0.0};
  double rel_change{0.0};
  double direction_norm{0.0};
  double wall_ms{0.0};
};

struct OptimizeResult {
  Series v_star;
  MfocSolution solution;  ///< cascade at v_star
  double initial_objective{0.0};
  std::vector<IterationRecord> history;
  OptimizeStatus status{OptimizeStatus::max_iter};
  std::string message;
};

struct LineSearchResult {
  bool accepted{false};
  double sigma{0.0};
  double f_new{0.0};
  int backtracks{0};
};

/// Discrete L2 norm over the output grid, sqrt(sum_k x_k^2 dt).
double l2_norm(const Series& x);

/// Largest sigma in {sigma_init shrink^k} with f(v + sigma d) <= f0 + c1 sigma slope.
/// Throws std::invalid_argument if d vanishes or slope is not negative.
LineSearchResult armijo_search(const ArmijoConfig& cfg, const Series& v, const Series& d, double f0, double slope,
                               const std::function<double(const Series&)>& objective_of);

OptimizeResult optimize(const ProblemSpec& spec);

/// Same loop from an explicit starting control.
OptimizeResult optimize(const ProblemSpec& spec, const Series& v_init);

struct TraceRow {
  int iter;
  double objective;
  double step_size;
  double rel_change;
};

std::vector<TraceRow> objective_trace(const OptimizeResult& result);

}  // namespace mfstack
