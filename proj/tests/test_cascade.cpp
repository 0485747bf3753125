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

#include <mfstack/cascade.hpp>

#include <cmath>
#include <numbers>

using namespace mfstack;

namespace {

constexpr double pi = std::numbers::pi;

ProblemSpec coarse_spec(Index n_xi = 100) {
  ProblemSpec spec = paper_spec(n_xi);
  return spec;
}

Trajectory constant_trajectory(const ProblemSpec& spec, double c) {
  Trajectory t(output_times(spec), make_grid(spec));
  t.data().setConstant(c);
  return t;
}

Series constant_series(const ProblemSpec& spec, double c) {
  return Series::sample(output_times(spec), [c](double) { return c; });
}

double l1_window(const Trajectory& a, Index k, const std::function<double(double)>& exact, double lo, double hi) {
  const Grid& grid = a.grid();
  double acc = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    const double x = grid.center(i);
    if (x >= lo && x <= hi) acc += std::abs(a.data()(k, i) - exact(x)) * grid.dxi();
  }
  return acc;
}

}  // namespace

TEST_CASE("cascade boundary data and invariants on the reference instance") {
  const ProblemSpec spec = paper_spec();
  const Series v = initial_control(spec);
  const MfocSolution sol = run_cascade(spec, v);
  const Index last = spec.n_t - 1;
  CHECK(sol.q.row(last).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.p.row(last).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.phi2.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.g.row(0).transpose().array().isApprox(initial_density(spec).values));
  for (Index k = 0; k < spec.n_t; ++k) {
    CHECK(std::abs(quadrature(sol.g.snapshot(k)) - 1.0) <= 1e-12);
    CHECK(sol.g.row(k).minCoeff() >= -1e-12);
    CHECK(std::abs(quadrature(sol.phi2.snapshot(k))) <= 1e-12);
  }
  CHECK(sol.w.data() == sol.q.data() / spec.gamma);
  CHECK(sol.q.data().allFinite());
  CHECK(sol.p.data().allFinite());
  CHECK(sol.phi2.data().allFinite());
  CHECK(sol.m_g.values()(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("psi gradient") {
  SUBCASE("constant moment map gives q identically zero") {
    ProblemSpec spec = coarse_spec();
    spec.moment = MomentMap::constant(1.0);
    const Trajectory q = solve_psi_gradient(spec, initial_control(spec));
    CHECK(q.data().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("characteristics oracle away from the seam") {
    // v = 0, gamma = 1: q_t + q q_xi = -xi, q(T) = 0 has q = xi tan(T - t) until
    // the rarefaction from the periodic seam arrives.
    double prev = 1e9;
    for (Index n : {125, 250, 500}) {
      ProblemSpec spec = coarse_spec(n);
      const Trajectory q = solve_psi_gradient(spec, constant_series(spec, 0.0));
      const Times& times = q.times();
      double err = 0.0;
      for (Index k = 50; k < spec.n_t; ++k) {
        const double tau = spec.T - times[k];
        err = std::max(err, l1_window(q, k, [tau](double x) { return x * std::tan(tau); }, 0.6, 1.4));
      }
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-3);
  }
}

TEST_CASE("density") {
  SUBCASE("zero velocity: mass exact, drift from g0 is numerical viscosity only") {
    double prev = 1e9;
    for (Index n : {100, 200, 400}) {
      ProblemSpec spec = coarse_spec(n);
      spec.g0 = [](double x) { return 1.0 + 0.5 * std::cos(pi * x); };
      const Trajectory g = solve_density(spec, constant_trajectory(spec, 0.0));
      const Field g0 = initial_density(spec);
      for (Index k = 0; k < spec.n_t; ++k) CHECK(std::abs(quadrature(g.snapshot(k)) - 1.0) <= 1e-12);
      const double err = (g.snapshot(spec.n_t - 1).values - g0.values).abs().sum() * g.grid().dxi();
      CHECK(err < 0.3 * prev);
      prev = err;
    }
    CHECK(prev < 5e-3);
  }
  SUBCASE("constant velocity translates the initial density") {
    const double c = 0.6;
    double prev = 1e9;
    for (Index n : {100, 200, 400, 800}) {
      ProblemSpec spec = coarse_spec(n);
      spec.gamma = 2.0;
      spec.g0 = [](double x) { return std::exp(-10 * (x - 0.8) * (x - 0.8)); };
      const Trajectory g = solve_density(spec, constant_trajectory(spec, c * spec.gamma));
      const Field g0 = initial_density(spec);
      const Grid& grid = g.grid();
      ArrayX<double> exact(grid.size());
      for (Index i = 0; i < grid.size(); ++i) exact(i) = g0.grid.interpolate(g0.values, grid.center(i) - c * spec.T);
      const double err = (g.snapshot(spec.n_t - 1).values - exact).abs().sum() * grid.dxi();
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 0.05);
  }
}

TEST_CASE("phi1 gradient") {
  SUBCASE("leader ignoring the followers gives p identically zero") {
    ProblemSpec spec = coarse_spec();
    spec.leader_obj = LeaderObjective::tracking_only();
    const Series v = initial_control(spec);
    const Trajectory q = solve_psi_gradient(spec, v);
    const Trajectory p = solve_phi1_gradient(spec, v, q, moment_curve(spec, solve_density(spec, q)));
    CHECK(p.data().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero q: p(t) = -int_t^T grad_m J^L ds away from the seam") {
    // v = 0, m_g = 1: grad_m J^L = sin(2 pi s) + 1.
    auto exact = [](double t) { return -((1.0 - t) - (1.0 - std::cos(2 * pi * t)) / (2 * pi)); };
    for (Index n_t : {100, 400}) {
      ProblemSpec spec = coarse_spec(400);
      spec.n_t = n_t;
      const Trajectory p = solve_phi1_gradient(spec, constant_series(spec, 0.0), constant_trajectory(spec, 0.0),
                                               constant_series(spec, 1.0));
      CHECK(p.row(n_t - 1).cwiseAbs().maxCoeff() == 0.0);
      double err = 0.0;
      for (Index k = 0; k < n_t; ++k)
        for (Index i = 0; i < p.grid().size(); ++i) {
          const double x = p.grid().center(i);
          if (x > 0.7 && x < 1.3) err = std::max(err, std::abs(p.data()(k, i) - exact(p.times()[k])));
        }
      // explicit Euler in time: O(dt_cap)
      CHECK(err <= 3.0 / double(n_t));
    }
  }
  SUBCASE("zero q with a periodic moment map: spatial profile is -m'(xi) int grad_m J^L") {
    ProblemSpec spec = coarse_spec(400);
    spec.moment = {[](double x) { return 1.0 + 0.3 * std::sin(pi * x); },
                   [](double x) { return 0.3 * pi * std::cos(pi * x); }};
    const Trajectory p = solve_phi1_gradient(spec, constant_series(spec, 0.0), constant_trajectory(spec, 0.0),
                                             constant_series(spec, 1.0));
    // at t = 0: int_0^1 (sin(2 pi s) + 1) ds = 1
    double err = 0.0;
    for (Index i = 0; i < p.grid().size(); ++i)
      err = std::max(err, std::abs(p.data()(0, i) + spec.moment.derivative(p.grid().center(i))));
    CHECK(err < 0.02);
  }
}

TEST_CASE("phi2") {
  SUBCASE("zero p gives zero phi2") {
    ProblemSpec spec = coarse_spec();
    const Series v = initial_control(spec);
    const Trajectory q = solve_psi_gradient(spec, v);
    const Trajectory phi2 = solve_phi2(spec, q, constant_trajectory(spec, 0.0), solve_density(spec, q));
    CHECK(phi2.data().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("eight-cell hand evaluation") {
    // q constant, p and g frozen in time; dt_cap = T/n_t = 0.05 is the only step size.
    ProblemSpec spec = paper_spec(8);
    spec.T = 0.1;
    spec.n_t = 2;
    spec.gamma = 2.0;
    const Grid grid = make_grid(spec);
    const Times times = output_times(spec);
    Trajectory q(times, grid), p(times, grid), g(times, grid);
    q.data().setConstant(0.4);
    for (Index i = 0; i < 8; ++i) {
      p.data().col(i).setConstant(std::sin(0.7 * double(i)));
      g.data().col(i).setConstant(1.0 + 0.1 * double(i));
    }
    const Trajectory phi2 = solve_phi2(spec, q, p, g);

    const double dx = grid.dxi(), dt = 0.05, gam = 2.0;
    ArrayX<double> u = ArrayX<double>::Zero(8);
    for (int step = 0; step < 2; ++step) {
      ArrayX<double> f(8), next(8);
      for (Index i = 0; i < 8; ++i) f(i) = (0.4 * u(i) - p.data()(0, i) * g.data()(0, i)) / gam;
      for (Index i = 0; i < 8; ++i) {
        const Index l = (i + 7) % 8, r = (i + 1) % 8;
        next(i) = 0.5 * (u(l) + u(r)) - dt / (2 * dx) * (f(r) - f(l));
      }
      u = next;
    }
    for (Index i = 0; i < 8; ++i) CHECK(phi2.data()(1, i) == doctest::Approx(u(i)).epsilon(1e-13));
  }
}

TEST_CASE("descent direction") {
  const ProblemSpec spec = coarse_spec();
  const Series v = initial_control(spec);
  SUBCASE("without phi2 it is the closed-form tracking residual") {
    const Series m = Series::sample(output_times(spec), [](double t) { return 1.0 + 0.2 * t; });
    const Series d = descent_direction(spec, v, m, constant_trajectory(spec, 0.0));
    for (Index k = 0; k < v.size(); ++k) {
      const double t = v.times()[k];
      CHECK(std::abs(d.values()(k) - (std::sin(2 * pi * t) + m.values()(k) - 2 * v.values()(k))) <= 1e-12);
    }
  }
  SUBCASE("vanishes at a stationary control") {
    ProblemSpec s = spec;
    s.leader_obj = LeaderObjective::tracking_only();
    s.beta = 3.0;
    const Series vs = Series::sample(output_times(s), [](double t) { return std::sin(2 * pi * t) / 4.0; });
    const MfocSolution sol = run_cascade(s, vs);
    const Series d = descent_direction(s, vs, sol.m_g, sol.phi2);
    CHECK(d.values().abs().maxCoeff() <= 1e-15);
  }
  SUBCASE("agrees with finite differences of the reduced objective") {
    for (Index n : {250, 500}) {
      const ProblemSpec s = paper_spec(n);
      const Series v0 = initial_control(s);
      const MfocSolution sol = run_cascade(s, v0);
      const Series d = descent_direction(s, v0, sol.m_g, sol.phi2);
      const double dt = v0.times().step(), h = 1e-4;
      for (Index k : {20, 50, 80}) {
        Series a = v0, b = v0;
        a.values()(k) += h;
        b.values()(k) -= h;
        const double fd = -(reduced_objective(s, a) - reduced_objective(s, b)) / (2 * h * dt);
        CHECK(fd * d.values()(k) > 0.0);
        CHECK(std::abs(fd - d.values()(k)) <= 0.05 * std::abs(fd));
      }
    }
  }
}

TEST_CASE("leader objective") {
  ProblemSpec spec = coarse_spec();
  const Times times = output_times(spec);
  const Series zero = constant_series(spec, 0.0);
  // left-endpoint rule of 1/2 sin^2(2 pi t) over a full period is exact
  CHECK(leader_objective(spec, zero, zero) == doctest::Approx(0.25).epsilon(1e-12));

  spec.beta = 0.0;
  const Series m = Series::sample(times, [](double t) { return 0.3 * t; });
  const Series track = Series::sample(times, [](double t) { return std::sin(2 * pi * t) + 0.3 * t; });
  CHECK(std::abs(leader_objective(spec, track, m)) <= 1e-15);

  const Series v = Series::sample(times, [](double t) { return 1.0 + t; });
  spec.beta = 1.0;
  const double j1 = leader_objective(spec, v, m);
  spec.beta = 2.0;
  const double j2 = leader_objective(spec, v, m);
  double penalty = 0.0;
  for (Index k = 0; k + 1 < times.size(); ++k) penalty += 0.5 * v.values()(k) * v.values()(k) * times.step();
  CHECK(j2 - j1 == doctest::Approx(penalty).epsilon(1e-12));
}

TEST_CASE("run cascade") {
  SUBCASE("no moment coupling in the leader cost") {
    ProblemSpec spec = coarse_spec();
    spec.zero_moment_adjoint = true;
    const Series v = initial_control(spec);
    const MfocSolution sol = run_cascade(spec, v);
    CHECK(sol.p.data().cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.phi2.data().cwiseAbs().maxCoeff() == 0.0);
    const Series d = descent_direction(spec, v, sol.m_g, sol.phi2);
    for (Index k = 0; k < v.size(); ++k) {
      const double t = v.times()[k];
      CHECK(d.values()(k) == doctest::Approx(std::sin(2 * pi * t) + sol.m_g.values()(k) - 2 * t).epsilon(1e-12));
    }
  }
  SUBCASE("reduced objective matches the full cascade") {
    const ProblemSpec spec = coarse_spec();
    const Series v = initial_control(spec);
    CHECK(reduced_objective(spec, v) == leader_objective(spec, v, run_cascade(spec, v).m_g));
  }
  SUBCASE("moment curve self-converges at first order") {
    auto moments = [](Index n) {
      const ProblemSpec spec = paper_spec(n);
      return run_cascade(spec, initial_control(spec)).m_g.values();
    };
    const ArrayX<double> m125 = moments(125), m250 = moments(250), m500 = moments(500), m1000 = moments(1000);
    const double e1 = (m125 - m250).abs().maxCoeff();
    const double e2 = (m250 - m500).abs().maxCoeff();
    const double e3 = (m500 - m1000).abs().maxCoeff();
    CHECK(e2 < e1);
    CHECK(e3 < e2);
    const double order = std::log2(e2 / e3);
    CHECK(order > 0.5);
    CHECK(order < 1.6);
  }
  SUBCASE("solver errors carry the stage name") {
    ProblemSpec spec = coarse_spec();
    const Series v = Series::sample(output_times(spec), [](double) { return std::nan(""); });
    try {
      run_cascade(spec, v);
      FAIL("expected a cascade error");
    } catch (const CascadeError& e) {
      CHECK(e.stage() == "psi_gradient");
    }
  }
}
