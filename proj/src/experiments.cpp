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

#include <mfstack/experiments.hpp>

#include <mfstack/particles.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace mfstack {

namespace {

/// Runs f(0..n-1) on up to `jobs` threads; the first exception is rethrown.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& f) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::ostream& log_of(const RunOptions& opt) {
  static std::ostringstream sink;
  return opt.log ? *opt.log : sink;
}

ProblemSpec checked_spec(const ProblemSpec& spec) {
  const auto errs = validate(spec);
  if (!errs.empty()) {
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& e : errs) os << "\n  " << e.field << ": " << e.message;
    throw ConfigError(os.str());
  }
  if (!spec.kernel.is_zero) throw ConfigError("the cascade solver requires a zero interaction kernel");
  return spec;
}

template <typename Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::config_error;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::config_error;
  }
}

void report(std::ostream& log, const ProblemSpec& spec, const OptimizeResult& r) {
  if (auto w = stiffness_warning(spec)) std::cerr << "warning: " << *w << "\n";
  log << "status " << to_string(r.status) << " after " << r.history.size() << " iteration(s)";
  if (!r.history.empty()) log << ", objective " << format_number(r.history.back().objective);
  log << "\n";
  if (!r.message.empty()) log << "  " << r.message << "\n";
}

}  // namespace

int exit_code_for(OptimizeStatus status) {
  switch (status) {
    case OptimizeStatus::converged:
    case OptimizeStatus::max_iter: return exit_code::ok;
    case OptimizeStatus::line_search_failed: return exit_code::line_search_failed;
    case OptimizeStatus::solver_error: return exit_code::solver_error;
  }
  return exit_code::solver_error;
}

std::string format_number(double x) {
  if (!std::isfinite(x)) throw std::domain_error("CSV values must be finite");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<const char*> header)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path.string()), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write '" + path_ + "'");
  bool first = true;
  for (const char* h : header) {
    if (!first) out_ << ',';
    out_ << h;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != columns_) throw std::logic_error("CSV row width does not match header of '" + path_ + "'");
  std::string line;
  for (const double x : values) {
    if (!line.empty()) line += ',';
    line += format_number(x);
  }
  out_ << line << '\n';
}

void write_field_csv(const std::filesystem::path& path, const Trajectory* field) {
  CsvWriter csv(path, {"t", "xi", "value"});
  if (field == nullptr || field->data().size() == 0) return;
  const Times& times = field->times();
  const Grid& grid = field->grid();
  for (Index k = 0; k < times.size(); ++k)
    for (Index i = 0; i < grid.size(); ++i) csv.row({times[k], grid.center(i), field->data()(k, i)});
}

std::vector<Index> probe_indices(Index n_t, int count) {
  std::vector<Index> out;
  for (int j = 0; j < count; ++j) {
    const auto k = Index(std::llround(double(j + 1) * double(n_t - 1) / double(count + 1)));
    out.push_back(std::clamp<Index>(k, 0, n_t - 1));
  }
  return out;
}

std::vector<GradcheckRow> gradient_check(const ProblemSpec& spec, const Series& v, const std::vector<Index>& probes,
                                         double h, int jobs) {
  const MfocSolution sol = run_cascade(spec, v);
  const Series d = descent_direction(spec, v, sol.m_g, sol.phi2);
  const double dt = v.times().step();
  std::vector<GradcheckRow> rows(probes.size());
  parallel_for(probes.size(), jobs, [&](std::size_t j) {
    const Index k = probes[j];
    Series plus = v;
    Series minus = v;
    plus.values()(k) += h;
    minus.values()(k) -= h;
    const double fd = -(reduced_objective(spec, plus) - reduced_objective(spec, minus)) / (2.0 * h * dt);
    const double ad = d.values()(k);
    const double denom = std::max(std::abs(fd), 1e-300);
    rows[j] = {k, ad, fd, std::abs(ad - fd) / denom};
  });
  return rows;
}

double median_rel_err(const std::vector<GradcheckRow>& rows) {
  if (rows.empty()) return 0.0;
  std::vector<double> e;
  for (const auto& r : rows) e.push_back(r.rel_err);
  std::sort(e.begin(), e.end());
  const std::size_t n = e.size();
  return n % 2 ? e[n / 2] : 0.5 * (e[n / 2 - 1] + e[n / 2]);
}

double cosine_similarity(const std::vector<GradcheckRow>& rows) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (const auto& r : rows) {
    ab += r.adjoint_d * r.fd_d;
    aa += r.adjoint_d * r.adjoint_d;
    bb += r.fd_d * r.fd_d;
  }
  if (aa == 0.0 || bb == 0.0) return aa == bb ? 1.0 : 0.0;
  return ab / std::sqrt(aa * bb);
}

int cmd_solve(const ExperimentConfig& cfg, const RunOptions& opt) {
  return guarded([&] {
    const ProblemSpec spec = checked_spec(make_spec(cfg));
    std::filesystem::create_directories(opt.out_dir);
    const Series v_initial = initial_control(spec);
    const OptimizeResult r = optimize(spec);
    report(log_of(opt), spec, r);

    {
      CsvWriter csv(opt.out_dir / "control.csv", {"t", "v_initial", "v_star"});
      for (Index k = 0; k < v_initial.size(); ++k)
        csv.row({v_initial.times()[k], v_initial.values()(k), r.v_star.values()(k)});
    }
    {
      CsvWriter csv(opt.out_dir / "convergence.csv", {"iter", "objective", "step_size", "rel_change", "wall_ms"});
      for (const auto& h : r.history) csv.row({double(h.iter), h.objective, h.step_size, h.rel_change, h.wall_ms});
    }
    const bool have = r.solution.q.data().size() > 0;
    write_field_csv(opt.out_dir / "w.csv", have ? &r.solution.w : nullptr);
    write_field_csv(opt.out_dir / "g.csv", have ? &r.solution.g : nullptr);
    write_field_csv(opt.out_dir / "phi1_grad.csv", have ? &r.solution.p : nullptr);
    write_field_csv(opt.out_dir / "phi2.csv", have ? &r.solution.phi2 : nullptr);
    return exit_code_for(r.status);
  });
}

int cmd_particles(const ExperimentConfig& cfg, const RunOptions& opt) {
  return guarded([&] {
    const ProblemSpec spec = checked_spec(make_spec(cfg));
    std::filesystem::create_directories(opt.out_dir);
    std::ostream& log = log_of(opt);
    const OptimizeResult r = optimize(spec);
    report(log, spec, r);

    CsvWriter consistency(opt.out_dir / "consistency.csv", {"sample_id", "xi0", "max_residual"});
    CsvWriter gap_csv(opt.out_dir / "density_gap.csv", {"t", "l1_gap"});
    CsvWriter paths(opt.out_dir / "particles.csv", {"t", "sample_id", "xi", "psi"});
    if (r.status == OptimizeStatus::solver_error) return exit_code::solver_error;

    std::vector<double> xi0 = cfg.particles_xi0;
    if (xi0.empty() && cfg.particles_samples > 0) {
      const ArrayX<double> s = sample_initial_positions(spec, cfg.particles_samples, cfg.particles_seed);
      xi0.assign(s.begin(), s.end());
    }
    const ConsistencyReport rep = consistency_residual(spec, r.solution, xi0, r.v_star);
    for (std::size_t i = 0; i < rep.samples.size(); ++i) {
      const auto& s = rep.samples[i];
      if (s.error) {
        log << "  sample " << i << " (xi0=" << format_number(s.xi0) << ") skipped: " << *s.error << "\n";
        continue;
      }
      consistency.row({double(i), s.xi0, s.max_residual});
    }
    const Times& times = r.v_star.times();
    for (Index k = 0; k < times.size(); ++k)
      for (std::size_t i = 0; i < rep.samples.size(); ++i)
        if (const auto& p = rep.samples[i].path)
          paths.row({times[k], double(i), p->xi.values()(k), p->psi.values()(k)});
    if (!rep.samples.empty())
      log << "consistency residual max " << format_number(rep.max_residual) << " mean "
          << format_number(rep.mean_residual) << "\n";

    if (cfg.particles_n > 0) {
      const Series gap = density_gap(spec, r.solution, cfg.particles_n, cfg.particles_seed ^ 0x9e3779b97f4a7c15ULL);
      for (Index k = 0; k < gap.size(); ++k) gap_csv.row({gap.times()[k], gap.values()(k)});
      log << "density gap at T " << format_number(gap.values()(gap.size() - 1)) << "\n";
    }
    return exit_code_for(r.status);
  });
}

int cmd_gradcheck(const ExperimentConfig& cfg, const RunOptions& opt) {
  return guarded([&] {
    const ProblemSpec spec = checked_spec(make_spec(cfg));
    std::filesystem::create_directories(opt.out_dir);
    CsvWriter csv(opt.out_dir / "gradcheck.csv", {"t_index", "adjoint_d", "fd_d", "rel_err"});
    std::vector<GradcheckRow> rows;
    try {
      rows = gradient_check(spec, initial_control(spec), probe_indices(spec.n_t, cfg.gradcheck_probes),
                            cfg.gradcheck_h, opt.jobs);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_code::solver_error;
    }
    for (const auto& r : rows) csv.row({double(r.t_index), r.adjoint_d, r.fd_d, r.rel_err});
    log_of(opt) << "gradcheck: " << rows.size() << " probe(s), median rel_err " << format_number(median_rel_err(rows))
                << ", cosine " << format_number(cosine_similarity(rows)) << "\n";
    return exit_code::ok;
  });
}

int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt) {
  return guarded([&] {
    const std::vector<double> betas = cfg.sweep_beta.empty() ? std::vector<double>{cfg.beta} : cfg.sweep_beta;
    const std::vector<double> gammas = cfg.sweep_gamma.empty() ? std::vector<double>{cfg.gamma} : cfg.sweep_gamma;
    const std::vector<Index> grids = cfg.sweep_n_xi.empty() ? std::vector<Index>{cfg.n_xi} : cfg.sweep_n_xi;

    struct Point {
      double beta, gamma;
      Index n_xi, n_t;
      ProblemSpec spec;
      OptimizeResult result;
      double wall_ms{0.0};
    };
    std::vector<Point> points;
    for (const double b : betas)
      for (const double g : gammas)
        for (const Index n : grids) points.push_back({b, g, n, cfg.n_t, checked_spec(make_spec(cfg, b, g, n, cfg.n_t)), {}, 0.0});
    std::vector<Point> time_points;
    if (cfg.sweep_n_t.size() >= 2)
      for (const Index nt : cfg.sweep_n_t)
        time_points.push_back({cfg.beta, cfg.gamma, cfg.n_xi, nt, checked_spec(make_spec(cfg, cfg.beta, cfg.gamma, cfg.n_xi, nt)), {}, 0.0});

    std::filesystem::create_directories(opt.out_dir);
    auto run = [](Point& p) {
      const auto start = std::chrono::steady_clock::now();
      p.result = optimize(p.spec);
      p.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };
    parallel_for(points.size(), opt.jobs, [&](std::size_t i) { run(points[i]); });
    parallel_for(time_points.size(), opt.jobs, [&](std::size_t i) { run(time_points[i]); });

    std::ostream& log = log_of(opt);
    int code = exit_code::ok;
    auto worst = [&](const OptimizeResult& r) { code = std::max(code, exit_code_for(r.status)); };
    {
      CsvWriter csv(opt.out_dir / "sweep.csv", {"beta", "gamma", "n_xi", "iterations", "final_objective", "wall_ms"});
      for (const auto& p : points) {
        worst(p.result);
        const double f = p.result.history.empty() ? p.result.initial_objective : p.result.history.back().objective;
        csv.row({p.beta, p.gamma, double(p.n_xi), double(p.result.history.size()), f, p.wall_ms});
        log << "beta=" << format_number(p.beta) << " gamma=" << format_number(p.gamma) << " n_xi=" << p.n_xi << ": "
            << to_string(p.result.status) << ", " << p.result.history.size() << " iteration(s), "
            << format_number(p.wall_ms) << " ms\n";
      }
    }

    if (grids.size() >= 2) {
      if (betas.size() * gammas.size() != 1) {
        log << "error.csv skipped: the grid-refinement study needs a single (beta, gamma) pair\n";
      } else {
        const auto ref = std::max_element(points.begin(), points.end(),
                                          [](const Point& a, const Point& b) { return a.n_xi < b.n_xi; });
        CsvWriter csv(opt.out_dir / "error.csv", {"n_xi", "l2_err_vs_finest"});
        for (const auto& p : points) {
          if (&p == &*ref) continue;
          const Series diff(p.result.v_star.times(), p.result.v_star.values() - ref->result.v_star.values());
          csv.row({double(p.n_xi), l2_norm(diff)});
        }
      }
    }

    if (!time_points.empty()) {
      const auto ref = std::max_element(time_points.begin(), time_points.end(),
                                        [](const Point& a, const Point& b) { return a.n_t < b.n_t; });
      CsvWriter csv(opt.out_dir / "error_nt.csv", {"n_t", "l2_err_vs_finest"});
      for (const auto& p : time_points) {
        worst(p.result);
        if (&p == &*ref) continue;
        const Series& v = p.result.v_star;
        ArrayX<double> diff(v.size());
        for (Index k = 0; k < v.size(); ++k) diff(k) = v.values()(k) - ref->result.v_star(v.times()[k]);
        csv.row({double(p.n_t), l2_norm(Series(v.times(), diff))});
      }
    }
    return code;
  });
}

std::string artifact_documentation() {
  return R"(Artifacts (CSV, header row, LF line endings, 17 significant digits):
  solve      control.csv      t,v_initial,v_star
             convergence.csv  iter,objective,step_size,rel_change,wall_ms
             w.csv            t,xi,value   follower control q/gamma
             g.csv            t,xi,value   follower density
             phi1_grad.csv    t,xi,value   gradient of the first leader multiplier
             phi2.csv         t,xi,value   second leader multiplier
  particles  consistency.csv  sample_id,xi0,max_residual
             density_gap.csv  t,l1_gap
             particles.csv    t,sample_id,xi,psi
  gradcheck  gradcheck.csv    t_index,adjoint_d,fd_d,rel_err
  sweep      sweep.csv        beta,gamma,n_xi,iterations,final_objective,wall_ms
             error.csv        n_xi,l2_err_vs_finest   (when n_xi is swept; finest grid is the reference)
             error_nt.csv     n_t,l2_err_vs_finest    (when n_t is swept)

Exit codes: 0 converged or max_iter, 1 configuration error, 2 line search failed, 3 solver error.
wall_ms columns are wall-clock measurements; every other column is a deterministic
function of the configuration and seed.
)";
}

}  // namespace mfstack
