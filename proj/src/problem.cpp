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

#include <mfstack/problem.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace mfstack {

MomentMap MomentMap::identity() {
  return {[](double xi) { return xi; }, [](double) { return 1.0; }};
}

MomentMap MomentMap::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }};
}

namespace {
double sin_2pi(double t) { return std::sin(2.0 * std::numbers::pi * t); }
}  // namespace

LeaderObjective LeaderObjective::reference() {
  LeaderObjective obj;
  obj.desired_control = sin_2pi;
  obj.value = [](double v, double m, double t) {
    const double r = sin_2pi(t) + m - v;
    return 0.5 * r * r;
  };
  obj.grad_v = [](double v, double m, double t) { return -(sin_2pi(t) + m - v); };
  obj.grad_m = [](double v, double m, double t) { return sin_2pi(t) + m - v; };
  return obj;
}

LeaderObjective LeaderObjective::tracking_only() {
  LeaderObjective obj;
  obj.desired_control = sin_2pi;
  obj.value = [](double v, double, double t) {
    const double r = sin_2pi(t) - v;
    return 0.5 * r * r;
  };
  obj.grad_v = [](double v, double, double t) { return -(sin_2pi(t) - v); };
  obj.grad_m = [](double, double, double) { return 0.0; };
  return obj;
}

FollowerObjective FollowerObjective::reference() {
  FollowerObjective obj;
  obj.value = [](double m, double v) { return -0.5 * (m - v) * (m - v); };
  obj.grad_m = [](double m, double v) { return -(m - v); };
  obj.grad_v = [](double m, double v) { return m - v; };
  return obj;
}

InteractionKernel InteractionKernel::zero() {
  return {[](double, double) { return 0.0; }, true};
}

InteractionKernel InteractionKernel::constant(double c) {
  if (c == 0.0) return zero();
  return {[c](double, double) { return c; }, false};
}

ProblemSpec paper_spec() { return paper_spec(500); }

ProblemSpec paper_spec(Index n_xi) {
  ProblemSpec s;
  s.xi_min = 0.0;
  s.xi_max = 2.0;
  s.T = 1.0;
  s.beta = 1.0;
  s.gamma = 1.0;
  s.leader_obj = LeaderObjective::reference();
  s.follower_obj = FollowerObjective::reference();
  s.moment = MomentMap::identity();
  s.kernel = InteractionKernel::zero();
  s.g0 = [](double xi) { return (xi >= 0.5 && xi <= 1.5) ? 1.0 : 0.0; };
  s.n_xi = n_xi;
  s.n_t = 100;
  s.cfl = 0.95;
  s.max_iter = 100;
  s.rel_tol = 1.0 / (100.0 * double(n_xi));
  s.v0 = [](double t) { return t; };
  return s;
}

std::vector<ValidationError> validate(const ProblemSpec& s) {
  std::vector<ValidationError> errs;
  auto fail = [&](std::string field, std::string msg) { errs.push_back({std::move(field), std::move(msg)}); };
  if (!(std::isfinite(s.xi_min) && std::isfinite(s.xi_max))) fail("xi_min", "domain bounds must be finite");
  else if (!(s.xi_min < s.xi_max)) fail("xi_max", "empty domain");
  if (!(s.T > 0.0) || !std::isfinite(s.T)) fail("T", "T must be positive");
  if (!(s.beta > 0.0)) fail("beta", "beta must be positive");
  if (!(s.gamma > 0.0)) fail("gamma", "gamma must be positive");
  if (s.n_xi < 2) fail("n_xi", "n_xi must be at least 2");
  if (s.n_t < 2) fail("n_t", "n_t must be at least 2");
  if (!(s.cfl > 0.0 && s.cfl <= 1.0)) fail("cfl", "cfl must lie in (0,1]");
  if (s.max_iter < 0) fail("max_iter", "max_iter must be non-negative");
  if (!(s.rel_tol > 0.0)) fail("rel_tol", "rel_tol must be positive");
  if (!(s.armijo.sigma_init > 0.0)) fail("armijo.sigma_init", "sigma_init must be positive");
  if (!(s.armijo.shrink > 0.0 && s.armijo.shrink < 1.0)) fail("armijo.shrink", "shrink must lie in (0,1)");
  if (!(s.armijo.c1 > 0.0 && s.armijo.c1 < 1.0)) fail("armijo.c1", "c1 must lie in (0,1)");
  if (s.armijo.max_backtracks < 0) fail("armijo.max_backtracks", "max_backtracks must be non-negative");
  if (!s.leader_obj.value || !s.leader_obj.grad_v || !s.leader_obj.grad_m || !s.leader_obj.desired_control)
    fail("leader_obj", "leader objective is incomplete");
  if (!s.follower_obj.value || !s.follower_obj.grad_m || !s.follower_obj.grad_v)
    fail("follower_obj", "follower objective is incomplete");
  if (!s.moment.value || !s.moment.derivative) fail("moment", "moment map is incomplete");
  if (!s.kernel.value) fail("kernel", "interaction kernel is missing");
  if (!s.v0) fail("v0", "initial control is missing");
  if (!s.g0) {
    fail("g0", "initial density is missing");
  } else if (s.n_xi >= 1 && s.xi_min < s.xi_max) {
    const Grid grid(s.xi_min, s.xi_max, s.n_xi);
    double mass = 0.0;
    bool negative = false;
    for (Index i = 0; i < grid.size(); ++i) {
      const double g = s.g0(grid.center(i));
      if (!(g >= 0.0) || !std::isfinite(g)) negative = true;
      mass += g;
    }
    if (negative) fail("g0", "initial density must be finite and non-negative");
    else if (!(mass > 0.0)) fail("g0", "initial density has zero mass on the grid");
  }
  return errs;
}

void require_valid(const ProblemSpec& spec) {
  const auto errs = validate(spec);
  if (errs.empty()) return;
  std::ostringstream os;
  os << "invalid problem:";
  for (const auto& e : errs) os << "\n  " << e.field << ": " << e.message;
  throw std::invalid_argument(os.str());
}

double leader_running_cost(const ProblemSpec& spec, double v, double m, double t) {
  return spec.leader_obj.value(v, m, t) + 0.5 * spec.beta * v * v;
}

FollowerCost follower_cost_and_grads(const ProblemSpec& spec, double xi, double v) {
  const double m = spec.moment.value(xi);
  return {spec.follower_obj.value(m, v), spec.follower_obj.grad_m(m, v), spec.follower_obj.grad_v(m, v)};
}

Grid make_grid(const ProblemSpec& spec) { return Grid(spec.xi_min, spec.xi_max, spec.n_xi); }

Times output_times(const ProblemSpec& spec) { return Times(0.0, spec.T, spec.n_t); }

MarchOptions<double> march_options(const ProblemSpec& spec) {
  return {spec.cfl, spec.T / double(spec.n_t)};
}

Field initial_density(const ProblemSpec& spec) {
  Field g = Field::sample(make_grid(spec), spec.g0);
  const double mass = quadrature(g);
  if (!(mass > 0.0)) throw std::invalid_argument("initial density has zero mass");
  g.values /= mass;
  return g;
}

Series initial_control(const ProblemSpec& spec) { return Series::sample(output_times(spec), spec.v0); }

std::optional<std::string> stiffness_warning(const ProblemSpec& spec) {
  const double dxi = (spec.xi_max - spec.xi_min) / double(spec.n_xi);
  if (spec.gamma < 10.0 * dxi) {
    std::ostringstream os;
    os << "gamma=" << spec.gamma << " is small relative to the cell width " << dxi
       << "; explicit transport steps may become very small";
    return os.str();
  }
  return std::nullopt;
}

}  // namespace mfstack
