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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mfstack/problem.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace mfstack;

namespace {

double central(const std::function<double(double)>& f, double x, double h) { return (f(x + h) - f(x - h)) / (2 * h); }

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); }

bool has_error(const std::vector<ValidationError>& errs, const std::string& msg) {
  return std::any_of(errs.begin(), errs.end(), [&](const auto& e) { return e.message == msg; });
}

}  // namespace

TEST_CASE("moment map derivative matches finite differences") {
  const auto m = MomentMap::identity();
  for (double xi : {0.1, 0.7, 1.3, 1.9}) CHECK(rel(m.derivative(xi), central(m.value, xi, 1e-5)) <= 1e-6);
  const auto c = MomentMap::constant(3.0);
  CHECK(c.value(0.4) == 3.0);
  CHECK(c.derivative(0.4) == 0.0);
}

TEST_CASE("objective partials match finite differences") {
  const auto L = LeaderObjective::reference();
  const auto F = FollowerObjective::reference();
  const double h = 1e-5;
  for (double v : {-0.8, 0.3, 1.7})
    for (double m : {-0.2, 0.9, 1.4})
      for (double t : {0.0, 0.37, 0.81}) {
        CHECK(rel(L.grad_v(v, m, t), central([&](double x) { return L.value(x, m, t); }, v, h)) <= 1e-6);
        CHECK(rel(L.grad_m(v, m, t), central([&](double x) { return L.value(v, x, t); }, m, h)) <= 1e-6);
        CHECK(rel(F.grad_m(m, v), central([&](double x) { return F.value(x, v); }, m, h)) <= 1e-6);
        CHECK(rel(F.grad_v(m, v), central([&](double x) { return F.value(m, x); }, v, h)) <= 1e-6);
      }
  CHECK(L.value(0.0, 0.0, 0.25) == doctest::Approx(0.5));
  CHECK(F.value(2.0, 0.0) == -2.0);
}

TEST_CASE("reference instance") {
  const auto spec = paper_spec();
  CHECK(spec.n_xi == 500);
  CHECK(spec.rel_tol == doctest::Approx(2.0e-5).epsilon(1e-14));
  CHECK(spec.cfl == 0.95);
  CHECK(spec.max_iter == 100);
  CHECK(validate(spec).empty());
  CHECK(quadrature(initial_density(spec)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(paper_spec(125).rel_tol == doctest::Approx(8e-5));
  const auto v0 = initial_control(spec);
  CHECK(v0.size() == 100);
  CHECK(v0.values()(99) == 1.0);
}

TEST_CASE("validation reports every violated invariant") {
  auto spec = paper_spec();
  spec.gamma = 0.0;
  CHECK(has_error(validate(spec), "gamma must be positive"));
  CHECK_THROWS_AS(require_valid(spec), std::invalid_argument);

  spec = paper_spec();
  spec.xi_max = spec.xi_min;
  CHECK(has_error(validate(spec), "empty domain"));

  spec = paper_spec();
  spec.beta = -1;
  spec.n_xi = 1;
  spec.n_t = 1;
  spec.cfl = 1.5;
  spec.T = 0;
  CHECK(validate(spec).size() >= 5);

  spec = paper_spec();
  spec.g0 = [](double) { return 0.0; };
  CHECK_FALSE(validate(spec).empty());
}

TEST_CASE("leader running cost") {
  auto spec = paper_spec();
  spec.beta = 1.0;
  CHECK(leader_running_cost(spec, 1.0, 1.0, 0.0) == doctest::Approx(0.5));
  spec.beta = 0.0;
  CHECK(leader_running_cost(spec, 0.0, 0.0, 0.25) == doctest::Approx(0.5));
  for (double t : {0.1, 0.45, 0.9}) {
    const double m = 0.6;
    const double v = std::sin(2 * std::numbers::pi * t) + m;
    CHECK(std::abs(leader_running_cost(spec, v, m, t)) <= 1e-15);
  }
}

TEST_CASE("follower cost and gradients") {
  const auto spec = paper_spec();
  const auto a = follower_cost_and_grads(spec, 0.7, 0.7);
  CHECK(a.value == 0.0);
  CHECK(a.grad_m == 0.0);
  CHECK(a.grad_v == 0.0);
  const auto b = follower_cost_and_grads(spec, 2.0, 0.0);
  CHECK(b.value == -2.0);
  CHECK(b.grad_m == -2.0);
  CHECK(b.grad_v == 2.0);
  const double h = 1e-5;
  const double fd = (follower_cost_and_grads(spec, 1.3, 0.4 + h).value - follower_cost_and_grads(spec, 1.3, 0.4 - h).value) / (2 * h);
  CHECK(rel(follower_cost_and_grads(spec, 1.3, 0.4).grad_v, fd) <= 1e-6);
}

TEST_CASE("stiffness warning for small gamma") {
  auto spec = paper_spec();
  CHECK_FALSE(stiffness_warning(spec).has_value());
  spec.gamma = 1e-3;
  CHECK(stiffness_warning(spec).has_value());
}
