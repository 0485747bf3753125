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

#include <mfstack/particles.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace mfstack {

namespace {

struct State {
  double xi;
  double psi;
};

/// RK4 march of the follower Pontryagin system from (xi0, psi0).
struct TpbvpIntegrator {
  const ProblemSpec& spec;
  const Series& v;
  int substeps;

  State rhs(double t, const State& s) const {
    const double m = spec.moment.value(s.xi);
    return {-s.psi / spec.gamma, -spec.moment.derivative(s.xi) * spec.follower_obj.grad_m(m, v(t))};
  }

  template <typename Visit>
  State run(double xi0, double psi0, Visit&& visit) const {
    const Times& times = v.times();
    State s{xi0, psi0};
    visit(0, 0, times[0], s);
    for (Index k = 0; k + 1 < times.size(); ++k) {
      const double t0 = times[k];
      const double h = (times[k + 1] - t0) / substeps;
      for (int j = 0; j < substeps; ++j) {
        const double t = t0 + j * h;
        const State k1 = rhs(t, s);
        const State k2 = rhs(t + 0.5 * h, {s.xi + 0.5 * h * k1.xi, s.psi + 0.5 * h * k1.psi});
        const State k3 = rhs(t + 0.5 * h, {s.xi + 0.5 * h * k2.xi, s.psi + 0.5 * h * k2.psi});
        const State k4 = rhs(t + h, {s.xi + h * k3.xi, s.psi + h * k3.psi});
        s.xi += h / 6.0 * (k1.xi + 2.0 * k2.xi + 2.0 * k3.xi + k4.xi);
        s.psi += h / 6.0 * (k1.psi + 2.0 * k2.psi + 2.0 * k3.psi + k4.psi);
        visit(k, j + 1, j + 1 == substeps ? times[k + 1] : t + h, s);
      }
    }
    return s;
  }

  double terminal_costate(double xi0, double psi0) const {
    return run(xi0, psi0, [](Index, int, double, const State&) {}).psi;
  }
};

}  // namespace

TpbvpSolution solve_follower_tpbvp(const ProblemSpec& spec, double xi0, const Series& v, int substeps) {
  if (!spec.kernel.is_zero) throw std::invalid_argument("solve_follower_tpbvp: requires a zero interaction kernel");
  if (substeps < 1) throw std::invalid_argument("solve_follower_tpbvp: substeps must be positive");
  constexpr double tol = 1e-12;
  constexpr double min_sensitivity = 1e-10;
  constexpr int max_iter = 50;

  const TpbvpIntegrator ode{spec, v, substeps};
  double s0 = 0.0;
  double f0 = ode.terminal_costate(xi0, s0);
  double s_best = s0;
  double sens = 1.0;
  int iter = 0;
  if (std::abs(f0) > tol) {
    double s1 = s0 - f0;
    double f1 = ode.terminal_costate(xi0, s1);
    for (iter = 1;; ++iter) {
      sens = (f1 - f0) / (s1 - s0);
      if (!std::isfinite(sens) || std::abs(sens) < min_sensitivity)
        throw ShootingError("shooting singular: d psi(T)/d psi(0) = " + std::to_string(sens));
      if (std::abs(f1) <= tol) break;
      if (iter >= max_iter) throw ShootingError("shooting did not converge in 50 iterations");
      const double s2 = s1 - f1 / sens;
      if (s2 == s1) break;
      s0 = s1;
      f0 = f1;
      s1 = s2;
      f1 = ode.terminal_costate(xi0, s1);
      if (!std::isfinite(f1)) throw ShootingError("shooting produced a non-finite terminal costate");
    }
    s_best = s1;
  }

  const Times& times = v.times();
  TpbvpSolution out;
  ArrayX<double> xs(times.size()), ps(times.size());
  const std::size_t fine = std::size_t(times.size() - 1) * std::size_t(substeps) + 1;
  out.fine_t.reserve(fine);
  out.fine_xi.reserve(fine);
  out.fine_psi.reserve(fine);
  ode.run(xi0, s_best, [&](Index k, int j, double t, const State& s) {
    out.fine_t.push_back(t);
    out.fine_xi.push_back(s.xi);
    out.fine_psi.push_back(s.psi);
    if (j == 0) {
      xs(k) = s.xi;
      ps(k) = s.psi;
    } else if (j == substeps) {
      xs(k + 1) = s.xi;
      ps(k + 1) = s.psi;
    }
  });
  if (std::abs(ps(ps.size() - 1)) > 1e-9) throw ShootingError("shooting left a terminal costate above 1e-9");
  out.xi = Series(times, std::move(xs));
  out.psi = Series(times, std::move(ps));
  out.iterations = iter;
  out.sensitivity = sens;
  return out;
}

ParticleEnsemble ParticleEnsemble::at_rest(const Times& times, ArrayX<double> positions) {
  ParticleEnsemble e;
  e.times = times;
  e.xi = std::move(positions);
  e.psi = ArrayX<double>::Zero(e.xi.size());
  e.xi_traj = RowMatrixX<double>::Zero(times.size(), e.xi.size());
  e.psi_traj = RowMatrixX<double>::Zero(times.size(), e.xi.size());
  return e;
}

ParticleEnsemble push_particles(const ProblemSpec& spec, const ParticleEnsemble& ensemble, const Trajectory& w) {
  const Grid grid = make_grid(spec);
  const Times& times = w.times();
  const Index n = ensemble.size();
  const double out_dt = times.step();
  const int substeps = std::max(1, int(std::ceil(4.0 * double(times.size()) * out_dt / spec.T - 1e-12)));
  const bool interacting = !spec.kernel.is_zero;

  auto velocity = [&](double t, const ArrayX<double>& x) {
    ArrayX<double> dx(n);
    for (Index i = 0; i < n; ++i) dx(i) = w.at(t, x(i));
    if (interacting && n > 0) {
      for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < n; ++j) acc += spec.kernel.value(x(i), x(j)) * (x(j) - x(i));
        dx(i) += acc / double(n);
      }
    }
    return dx;
  };

  ParticleEnsemble out = ParticleEnsemble::at_rest(times, ensemble.xi.unaryExpr([&](double x) { return grid.wrap_position(x); }));
  out.psi = ensemble.psi;
  out.xi_traj.row(0) = out.xi.matrix().transpose();
  out.psi_traj.row(0) = out.psi.matrix().transpose();
  ArrayX<double> x = out.xi;
  for (Index k = 0; k + 1 < times.size(); ++k) {
    const double h = out_dt / substeps;
    for (int j = 0; j < substeps; ++j) {
      const double t = times[k] + j * h;
      const ArrayX<double> k1 = velocity(t, x);
      const ArrayX<double> k2 = velocity(t + 0.5 * h, x + 0.5 * h * k1);
      const ArrayX<double> k3 = velocity(t + 0.5 * h, x + 0.5 * h * k2);
      const ArrayX<double> k4 = velocity(t + h, x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite()) throw BlowUpError("push_particles: non-finite particle state");
      x = x.unaryExpr([&](double y) { return grid.wrap_position(y); });
    }
    out.xi_traj.row(k + 1) = x.matrix().transpose();
    out.psi_traj.row(k + 1) = out.psi.matrix().transpose();
  }
  out.xi = x;
  return out;
}

Field empirical_density(const Grid& grid, const ArrayX<double>& positions) {
  Field f(grid);
  const Index n = positions.size();
  if (n == 0) return f;
  for (Index i = 0; i < n; ++i) f.values(grid.cell_of(positions(i))) += 1.0;
  f.values /= double(n) * grid.dxi();
  return f;
}

Field empirical_density(const ParticleEnsemble& ensemble, const Grid& grid) {
  return empirical_density(grid, ensemble.xi);
}

ArrayX<double> sample_initial_positions(const ProblemSpec& spec, Index n, std::uint64_t seed) {
  const Field g0 = initial_density(spec);
  const Grid& grid = g0.grid;
  std::vector<double> cdf(std::size_t(grid.size()));
  double acc = 0.0;
  for (Index i = 0; i < grid.size(); ++i) {
    acc += g0.values(i) * grid.dxi();
    cdf[std::size_t(i)] = acc;
  }
  std::mt19937_64 rng(seed);
  ArrayX<double> out(n);
  for (Index s = 0; s < n; ++s) {
    const double u = double(rng() >> 11) * 0x1.0p-53 * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const Index cell = std::min<Index>(Index(it - cdf.begin()), grid.size() - 1);
    const double below = cell == 0 ? 0.0 : cdf[std::size_t(cell - 1)];
    const double frac = std::clamp((u - below) / (g0.values(cell) * grid.dxi()), 0.0, 1.0);
    out(s) = grid.xi_min() + (double(cell) + frac) * grid.dxi();
  }
  return out;
}

ConsistencyReport consistency_residual(const ProblemSpec& spec, const MfocSolution& solution,
                                       const std::vector<double>& xi0_samples, const Series& v) {
  ConsistencyReport rep;
  const Times& times = v.times();
  rep.residual_profile = ArrayX<double>::Zero(times.size());
  std::map<double, std::size_t> first_seen;
  double sum = 0.0;
  std::size_t ok = 0;
  for (const double xi0 : xi0_samples) {
    SampleResidual r;
    r.xi0 = xi0;
    try {
      TpbvpSolution path = solve_follower_tpbvp(spec, xi0, v);
      for (Index k = 0; k < times.size(); ++k) {
        const double res = std::abs(path.psi.values()(k) + solution.q.at(times[k], path.xi.values()(k)));
        r.max_residual = std::max(r.max_residual, res);
        rep.residual_profile(k) = std::max(rep.residual_profile(k), res);
      }
      rep.max_residual = std::max(rep.max_residual, r.max_residual);
      sum += r.max_residual;
      ++ok;
      auto [it, inserted] = first_seen.emplace(xi0, rep.samples.size());
      if (!inserted) {
        const auto& ref = *rep.samples[it->second].path;
        for (std::size_t j = 0; j < path.fine_psi.size(); ++j)
          rep.duplicate_psi_spread = std::max(rep.duplicate_psi_spread, std::abs(path.fine_psi[j] - ref.fine_psi[j]));
      }
      r.path = std::move(path);
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    rep.samples.push_back(std::move(r));
  }
  rep.mean_residual = ok > 0 ? sum / double(ok) : 0.0;
  return rep;
}

Series density_gap(const ProblemSpec& spec, const Trajectory& g, const Trajectory& w, Index n, std::uint64_t seed) {
  const ParticleEnsemble start = ParticleEnsemble::at_rest(w.times(), sample_initial_positions(spec, n, seed));
  const ParticleEnsemble pushed = push_particles(spec, start, w);
  const Times& times = g.times();
  ArrayX<double> gap(times.size());
  for (Index k = 0; k < times.size(); ++k) {
    const Field emp = empirical_density(g.grid(), pushed.xi_traj.row(k).transpose().array().eval());
    gap(k) = (emp.values - g.row(k)).abs().sum() * g.grid().dxi();
  }
  return Series(times, std::move(gap));
}

Series density_gap(const ProblemSpec& spec, const MfocSolution& solution, Index n, std::uint64_t seed) {
  return density_gap(spec, solution.g, solution.w, n, seed);
}

}  // namespace mfstack
