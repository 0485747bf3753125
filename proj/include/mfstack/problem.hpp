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

#include <mfstack/finite_volume.hpp>
#include <mfstack/grid.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mfstack {

/// Moment map m(xi) of a follower state and its derivative.
struct MomentMap {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static MomentMap identity();
  static MomentMap constant(double c);
};

/// Leader running cost J^L(v, m; t) with partials and the desired control v_d(t).
struct LeaderObjective {
  std::function<double(double v, double m, double t)> value;
  std::function<double(double v, double m, double t)> grad_v;
  std::function<double(double v, double m, double t)> grad_m;
  std::function<double(double t)> desired_control;

  /// 1/2 (v_d(t) + m - v)^2 with v_d(t) = sin(2 pi t).
  static LeaderObjective reference();
  /// 1/2 (v_d(t) - v)^2; independent of the follower moment.
  static LeaderObjective tracking_only();
};

/// Follower running cost J^F(m, v) with partials.
struct FollowerObjective {
  std::function<double(double m, double v)> value;
  std::function<double(double m, double v)> grad_m;
  std::function<double(double m, double v)> grad_v;

  /// -1/2 (m - v)^2.
  static FollowerObjective reference();
};

/// Pairwise interaction P(xi, xi_hat) in the follower dynamics.
struct InteractionKernel {
  std::function<double(double, double)> value;
  bool is_zero{true};

  static InteractionKernel zero();
  static InteractionKernel constant(double c);
};

struct ArmijoConfig {
  double sigma_init{1.0};
  double shrink{0.5};
  double c1{1e-4};
  int max_backtracks{40};
};

/// Complete description of one game instance and its discretization.
struct ProblemSpec {
  double xi_min{0.0};
  double xi_max{2.0};
  double T{1.0};
  double beta{1.0};
  double gamma{1.0};
  LeaderObjective leader_obj;
  FollowerObjective follower_obj;
  MomentMap moment;
  InteractionKernel kernel;
  std::function<double(double)> g0;
  Index n_xi{500};
  Index n_t{100};
  double cfl{0.95};
  int max_iter{100};
  double rel_tol{2e-5};
  ArmijoConfig armijo;
  std::function<double(double)> v0;
  /// When set, the leader adjoint source drops the moment coupling (grad_m J^L is
  /// treated as zero inside the cascade). Ablation switch for diagnostics.
  bool zero_moment_adjoint{false};
};

/// The reference experiment: xi in [0,2], T = 1, uniform g0 on [0.5,1.5],
/// v0(t) = t, 500 cells, CFL 0.95, tol = 1/(100 n_xi).
ProblemSpec paper_spec();

/// Same configuration with the grid resolution (and the tolerance tied to it) changed.
ProblemSpec paper_spec(Index n_xi);

struct ValidationError {
  std::string field;
  std::string message;
};

/// Every violated invariant; empty when the spec is usable.
std::vector<ValidationError> validate(const ProblemSpec& spec);

/// Throws std::invalid_argument listing all violations.
void require_valid(const ProblemSpec& spec);

/// J^L(v, m; t) + beta/2 v^2.
double leader_running_cost(const ProblemSpec& spec, double v, double m, double t);

struct FollowerCost {
  double value;
  double grad_m;
  double grad_v;
};

/// J^F(m(xi), v) and its partials at m = m(xi).
FollowerCost follower_cost_and_grads(const ProblemSpec& spec, double xi, double v);

Grid make_grid(const ProblemSpec& spec);
Times output_times(const ProblemSpec& spec);
MarchOptions<double> march_options(const ProblemSpec& spec);

/// g0 sampled at cell centers and scaled to unit mass under `quadrature`.
Field initial_density(const ProblemSpec& spec);

/// v0 sampled on the output time grid.
Series initial_control(const ProblemSpec& spec);

/// Explicit stepping becomes stiff for small gamma relative to the cell width.
std::optional<std::string> stiffness_warning(const ProblemSpec& spec);

}  // namespace mfstack
