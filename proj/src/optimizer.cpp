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

#include <mfstack/optimizer.hpp>

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mfstack {

std::string to_string(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::converged: return "converged";
    case OptimizeStatus::max_iter: return "max_iter";
    case OptimizeStatus::line_search_failed: return "line_search_failed";
    case OptimizeStatus::solver_error: return "solver_error";
  }
  return "unknown";
}

double l2_norm(const Series& x) { return std::sqrt(x.values().square().sum() * x.times().step()); }

LineSearchResult armijo_search(const ArmijoConfig& cfg, const Series& v, const Series& d, double f0, double slope,
                               const std::function<double(const Series&)>& objective_of) {
  if (d.values().abs().maxCoeff() == 0.0) throw std::invalid_argument("armijo_search: descent direction is zero");
  if (!(slope < 0.0)) throw std::invalid_argument("armijo_search: slope must be negative");

  LineSearchResult res;
  double sigma = cfg.sigma_init;
  for (int k = 0; k <= cfg.max_backtracks; ++k) {
    Series trial(v.times(), v.values() + sigma * d.values());
    const double f = objective_of(trial);
    if (std::isfinite(f) && f <= f0 + cfg.c1 * sigma * slope) {
      res.accepted = true;
      res.sigma = sigma;
      res.f_new = f;
      res.backtracks = k;
      return res;
    }
    sigma *= cfg.shrink;
  }
  res.backtracks = cfg.max_backtracks;
  return res;
}

OptimizeResult optimize(const ProblemSpec& spec) { return optimize(spec, initial_control(spec)); }

OptimizeResult optimize(const ProblemSpec& spec, const Series& v_init) {
  require_valid(spec);
  using clock = std::chrono::steady_clock;
  constexpr double eps_abs = 1e-12;

  OptimizeResult out;
  Series v = v_init;
  out.v_star = v;
  MfocSolution sol;
  double f = 0.0;
  try {
    sol = run_cascade(spec, v);
    f = leader_objective(spec, v, sol.m_g);
  } catch (const std::exception& e) {
    out.status = OptimizeStatus::solver_error;
    out.message = e.what();
    return out;
  }
  out.initial_objective = f;
  out.status = OptimizeStatus::max_iter;
  auto objective_of = [&spec](const Series& trial) { return reduced_objective(spec, trial); };

  for (int k = 0; k < spec.max_iter; ++k) {
    const auto start = clock::now();
    IterationRecord rec;
    rec.iter = k;
    try {
      const Series d = descent_direction(spec, v, sol.m_g, sol.phi2);
      rec.direction_norm = l2_norm(d);
      const double scale = 1.0 + v.values().abs().maxCoeff();
      if (d.values().abs().maxCoeff() <= 1e-14 * scale) {
        rec.objective = f;
        rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        out.history.push_back(rec);
        out.status = OptimizeStatus::converged;
        break;
      }
      const double slope = -d.values().square().sum() * v.times().step();
      const LineSearchResult ls = armijo_search(spec.armijo, v, d, f, slope, objective_of);
      if (!ls.accepted) {
        out.status = OptimizeStatus::line_search_failed;
        out.message = "no step satisfied the Armijo condition at iteration " + std::to_string(k);
        break;
      }
      Series v_next(v.times(), v.values() + ls.sigma * d.values());
      sol = run_cascade(spec, v_next);
      f = leader_objective(spec, v_next, sol.m_g);
      rec.objective = f;
      rec.step_size = ls.sigma;
      rec.rel_change = l2_norm(Series(v.times(), v_next.values() - v.values())) / std::max(l2_norm(v), eps_abs);
      v = std::move(v_next);
    } catch (const std::exception& e) {
      out.status = OptimizeStatus::solver_error;
      out.message = e.what();
      break;
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    out.history.push_back(rec);
    if (rec.rel_change < spec.rel_tol) {
      out.status = OptimizeStatus::converged;
      break;
    }
  }
  out.v_star = v;
  out.solution = std::move(sol);
  return out;
}

std::vector<TraceRow> objective_trace(const OptimizeResult& result) {
  std::vector<TraceRow> rows;
  rows.reserve(result.history.size());
  for (const auto& r : result.history) rows.push_back({r.iter, r.objective, r.step_size, r.rel_change});
  return rows;
}

}  // namespace mfstack
