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

#include <mfstack/cascade.hpp>

#include <mfstack/finite_volume.hpp>

namespace mfstack {

namespace {

void require_no_interaction(const ProblemSpec& spec) {
  if (!spec.kernel.is_zero)
    throw std::invalid_argument("the sequential cascade requires a zero interaction kernel");
}

ArrayX<double> moment_at_centers(const ProblemSpec& spec, const Grid& grid) {
  ArrayX<double> m(grid.size());
  for (Index i = 0; i < grid.size(); ++i) m(i) = spec.moment.value(grid.center(i));
  return m;
}

auto transport_speed(const Trajectory& q, double gamma) {
  return [&q, gamma](const ArrayX<double>&, double t) { return q.at_time(t).abs().maxCoeff() / gamma; };
}

template <typename F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const CascadeError&) {
    throw;
  } catch (const std::exception& e) {
    throw CascadeError(stage, e.what());
  }
}

}  // namespace

Trajectory solve_psi_gradient(const ProblemSpec& spec, const Series& v) {
  require_no_interaction(spec);
  const Grid grid = make_grid(spec);
  const ArrayX<double> m = moment_at_centers(spec, grid);
  const double gamma = spec.gamma;
  const auto& jf = spec.follower_obj.value;

  auto flux = [&](const ArrayX<double>& q, double t) {
    const double vt = v(t);
    ArrayX<double> f(q.size());
    for (Index i = 0; i < q.size(); ++i) f(i) = q(i) * q(i) / (2.0 * gamma) - jf(m(i), vt);
    return f;
  };
  auto speed = [gamma](const ArrayX<double>& q, double) { return q.abs().maxCoeff() / gamma; };
  return solve_backward(Field(grid), flux, NoSource{}, speed, 0.0, spec.T, output_times(spec), march_options(spec));
}

Trajectory solve_density(const ProblemSpec& spec, const Trajectory& q) {
  const double gamma = spec.gamma;
  auto flux = [&](const ArrayX<double>& g, double t) -> ArrayX<double> { return q.at_time(t) * g / gamma; };
  return solve_forward(initial_density(spec), flux, NoSource{}, transport_speed(q, gamma), 0.0, spec.T,
                       output_times(spec), march_options(spec));
}

Trajectory solve_phi1_gradient(const ProblemSpec& spec, const Series& v, const Trajectory& q, const Series& m_g) {
  const Grid grid = make_grid(spec);
  const double gamma = spec.gamma;
  const ArrayX<double> m = moment_at_centers(spec, grid);

  // The moment source grad_m J^L(t) m'(xi) enters as the flux term
  // -grad_m J^L(t) m(xi), like J^F in the q equation, so a moment map that is
  // discontinuous across the periodic seam contributes at the seam face.
  auto flux = [&](const ArrayX<double>& p, double t) -> ArrayX<double> {
    const double gm = spec.zero_moment_adjoint ? 0.0 : spec.leader_obj.grad_m(v(t), m_g(t), t);
    return q.at_time(t) * p / gamma - gm * m;
  };
  return solve_backward(Field(grid), flux, NoSource{}, transport_speed(q, gamma), 0.0, spec.T, output_times(spec),
                        march_options(spec));
}

Trajectory solve_phi2(const ProblemSpec& spec, const Trajectory& q, const Trajectory& p, const Trajectory& g) {
  const Grid grid = make_grid(spec);
  const double gamma = spec.gamma;
  auto flux = [&](const ArrayX<double>& phi, double t) -> ArrayX<double> {
    return (q.at_time(t) * phi - p.at_time(t) * g.at_time(t)) / gamma;
  };
  return solve_forward(Field(grid), flux, NoSource{}, transport_speed(q, gamma), 0.0, spec.T, output_times(spec),
                       march_options(spec));
}

Series moment_curve(const ProblemSpec& spec, const Trajectory& g) {
  ArrayX<double> m(g.times().size());
  for (Index k = 0; k < m.size(); ++k) m(k) = first_moment(g.snapshot(k), spec.moment.value);
  return Series(g.times(), std::move(m));
}

Series descent_direction(const ProblemSpec& spec, const Series& v, const Series& m_g, const Trajectory& phi2) {
  const Times& times = v.times();
  const Grid& grid = phi2.grid();
  const ArrayX<double> m = moment_at_centers(spec, grid);
  ArrayX<double> d(times.size());
  for (Index k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const double vk = v.values()(k);
    double coupling = 0.0;
    for (Index i = 0; i < grid.size(); ++i) coupling += spec.follower_obj.grad_v(m(i), vk) * phi2.data()(k, i);
    coupling *= grid.dxi();
    d(k) = -(spec.leader_obj.grad_v(vk, m_g.values()(k), t) + spec.beta * vk - coupling);
  }
  return Series(times, std::move(d));
}

double leader_objective(const ProblemSpec& spec, const Series& v, const Series& m_g) {
  const Times& times = v.times();
  const double dt = times.step();
  double acc = 0.0;
  for (Index k = 0; k + 1 < times.size(); ++k)
    acc += leader_running_cost(spec, v.values()(k), m_g.values()(k), times[k]);
  return acc * dt;
}

MfocSolution run_cascade(const ProblemSpec& spec, const Series& v) {
  require_no_interaction(spec);
  MfocSolution sol;
  sol.q = staged("psi_gradient", [&] { return solve_psi_gradient(spec, v); });
  sol.g = staged("density", [&] { return solve_density(spec, sol.q); });
  sol.m_g = moment_curve(spec, sol.g);
  sol.p = staged("phi1_gradient", [&] { return solve_phi1_gradient(spec, v, sol.q, sol.m_g); });
  sol.phi2 = staged("phi2", [&] { return solve_phi2(spec, sol.q, sol.p, sol.g); });
  sol.w = Trajectory(sol.q.times(), sol.q.grid(), sol.q.data() / spec.gamma);
  return sol;
}

double reduced_objective(const ProblemSpec& spec, const Series& v) {
  require_no_interaction(spec);
  const Trajectory q = staged("psi_gradient", [&] { return solve_psi_gradient(spec, v); });
  const Trajectory g = staged("density", [&] { return solve_density(spec, q); });
  return leader_objective(spec, v, moment_curve(spec, g));
}

}  // namespace mfstack
