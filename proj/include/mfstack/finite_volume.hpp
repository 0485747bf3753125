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

// Explicit finite-volume transport on a periodic 1-D grid: Lax-Friedrichs
// fluxes, CFL-limited adaptive steps, and forward/backward marching that
// records snapshots on a uniform output grid.

#include <mfstack/grid.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace mfstack {

/// Raised when a transport update produces non-finite values.
class BlowUpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tag for source-free equations.
struct NoSource {};

/// Numerical viscosity of the interface flux: classic uses alpha = dxi/dt,
/// local (Rusanov) uses the wave-speed bound, so zero speed means no smoothing.
enum class Dissipation { classic, local };

template <typename Scalar>
struct MarchOptions {
  Scalar cfl{0.95};
  /// Upper bound on any step; also the step used when the wave speed vanishes.
  Scalar dt_cap{0.01};
  Dissipation dissipation{Dissipation::classic};
};

template <typename Scalar>
Scalar cfl_dt(Scalar max_speed, Scalar dxi, Scalar cfl, Scalar dt_cap) {
  using std::isfinite;
  if (!isfinite(max_speed) || max_speed < Scalar(0))
    throw std::invalid_argument("cfl_dt: wave speed must be finite and non-negative");
  if (!(dxi > Scalar(0))) throw std::invalid_argument("cfl_dt: dxi must be positive");
  if (!(cfl > Scalar(0) && cfl <= Scalar(1))) throw std::invalid_argument("cfl_dt: cfl must lie in (0,1]");
  if (max_speed == Scalar(0)) return dt_cap;
  return std::min(dt_cap, cfl * dxi / max_speed);
}

/// Wraps a pointwise flux f(u, xi, t) into the field form used by the marchers.
template <typename Scalar, typename F>
auto pointwise_flux(const PeriodicGrid1D<Scalar>& grid, F f) {
  return [grid, f](const ArrayX<Scalar>& u, Scalar t) {
    ArrayX<Scalar> out(u.size());
    for (Index i = 0; i < u.size(); ++i) out(i) = f(u(i), grid.center(i), t);
    return out;
  };
}

/// Wraps a pointwise source s(xi, t) into the field form used by the marchers.
template <typename Scalar, typename S>
auto pointwise_source(const PeriodicGrid1D<Scalar>& grid, S s) {
  return [grid, s](Scalar t) {
    ArrayX<Scalar> out(grid.size());
    for (Index i = 0; i < grid.size(); ++i) out(i) = s(grid.center(i), t);
    return out;
  };
}

/// One conservative (local) Lax-Friedrichs update
///   u_i <- u_i - dt/dxi (F_{i+1/2} - F_{i-1/2}) + dt s_i,
///   F_{i+1/2} = (f_i + f_{i+1})/2 - alpha/2 (u_{i+1} - u_i),
/// with periodic indices and alpha a bound on |df/du|. `flux(u, t)` returns
/// cell-center flux values and `source(t)` cell-center source values (or pass
/// NoSource{}).
template <typename Scalar, typename Flux, typename Source>
CellField<Scalar> lf_step(const CellField<Scalar>& u, Flux&& flux, Source&& source, Scalar t, Scalar dt,
                          Scalar alpha) {
  if (!(dt > Scalar(0))) throw std::invalid_argument("lf_step: dt must be positive");
  if (!(alpha >= Scalar(0))) throw std::invalid_argument("lf_step: alpha must be non-negative");
  const Index n = u.grid.size();
  const Scalar dxi = u.grid.dxi();
  const ArrayX<Scalar> f = flux(u.values, t);
  if (f.size() != n) throw std::invalid_argument("lf_step: flux returned wrong size");

  const Scalar diss = alpha / Scalar(2);
  ArrayX<Scalar> face(n);  // face(i) = F_{i+1/2}
  for (Index i = 0; i < n; ++i) {
    const Index r = (i + 1 == n) ? 0 : i + 1;
    face(i) = Scalar(0.5) * (f(i) + f(r)) - diss * (u.values(r) - u.values(i));
  }

  const Scalar ratio = dt / dxi;
  CellField<Scalar> out(u.grid);
  for (Index i = 0; i < n; ++i) {
    const Index l = (i == 0) ? n - 1 : i - 1;
    out.values(i) = u.values(i) - ratio * (face(i) - face(l));
  }
  if constexpr (!std::is_same_v<std::decay_t<Source>, NoSource>) {
    const ArrayX<Scalar> s = source(t);
    out.values += dt * s;
  }
  if (!out.values.allFinite()) throw BlowUpError("lf_step: non-finite value at t=" + std::to_string(double(t)));
  return out;
}

namespace detail {

/// Marches from t0 to t1 and hands every requested sample (ascending times in
/// [t0, t1]) to `record(j, values)`, interpolating linearly between steps.
template <typename Scalar, typename Flux, typename Source, typename Speed, typename Record>
void march(CellField<Scalar> u, Flux&& flux, Source&& source, Speed&& speed_bound, Scalar t0, Scalar t1,
           const std::vector<Scalar>& samples, const MarchOptions<Scalar>& opt, Record&& record) {
  using std::isfinite;
  std::size_t j = 0;
  while (j < samples.size() && samples[j] <= t0) record(j++, u.values);
  Scalar t = t0;
  while (t < t1) {
    const Scalar speed = speed_bound(u.values, t);
    if (!isfinite(speed)) throw BlowUpError("wave-speed bound is not finite at t=" + std::to_string(double(t)));
    Scalar dt = cfl_dt(speed, u.grid.dxi(), opt.cfl, opt.dt_cap);
    bool last = false;
    if (dt >= t1 - t) {
      dt = t1 - t;
      last = true;
    }
    CellField<Scalar> next = lf_step(u, flux, source, t, dt, opt.dissipation == Dissipation::classic ? u.grid.dxi() / dt : speed);
    const Scalar t_next = last ? t1 : t + dt;
    while (j < samples.size() && samples[j] <= t_next) {
      if (samples[j] == t_next) {
        record(j, next.values);
      } else {
        const Scalar w = (samples[j] - t) / (t_next - t);
        record(j, ((Scalar(1) - w) * u.values + w * next.values).eval());
      }
      ++j;
    }
    u = std::move(next);
    t = t_next;
  }
  for (; j < samples.size(); ++j) record(j, u.values);
}

}  // namespace detail

/// Solves u_t + (f(u, xi, t))_xi = s(xi, t) forward from u(t_start) = u0,
/// recording snapshots at `sample_times` (which must lie in [t_start, t_end]).
template <typename Scalar, typename Flux, typename Source, typename Speed>
FieldTrajectory<Scalar> solve_forward(const CellField<Scalar>& u0, Flux&& flux, Source&& source, Speed&& speed_bound,
                                      Scalar t_start, Scalar t_end, const UniformTimes<Scalar>& sample_times,
                                      const MarchOptions<Scalar>& opt) {
  if (!(t_start < t_end)) throw std::invalid_argument("solve_forward: t_start must precede t_end");
  FieldTrajectory<Scalar> traj(sample_times, u0.grid);
  std::vector<Scalar> samples(sample_times.size());
  for (Index k = 0; k < sample_times.size(); ++k) samples[k] = sample_times[k];
  detail::march(u0, flux, source, speed_bound, t_start, t_end, samples, opt,
                [&](std::size_t k, const ArrayX<Scalar>& v) { traj.row(Index(k)) = v; });
  return traj;
}

/// Solves the same conservation law backward from the terminal datum
/// u(t_end) = uT. Internally marches tau = t_end - t forward with negated flux
/// and source; snapshots are indexed by original time.
template <typename Scalar, typename Flux, typename Source, typename Speed>
FieldTrajectory<Scalar> solve_backward(const CellField<Scalar>& uT, Flux&& flux, Source&& source, Speed&& speed_bound,
                                       Scalar t_start, Scalar t_end, const UniformTimes<Scalar>& sample_times,
                                       const MarchOptions<Scalar>& opt) {
  if (!(t_start < t_end)) throw std::invalid_argument("solve_backward: t_start must precede t_end");
  const Index n = sample_times.size();
  FieldTrajectory<Scalar> traj(sample_times, uT.grid);
  std::vector<Scalar> samples(n);
  for (Index j = 0; j < n; ++j) samples[j] = t_end - sample_times[n - 1 - j];

  auto rflux = [&](const ArrayX<Scalar>& u, Scalar tau) -> ArrayX<Scalar> { return -flux(u, t_end - tau); };
  auto rspeed = [&](const ArrayX<Scalar>& u, Scalar tau) { return speed_bound(u, t_end - tau); };
  auto record = [&](std::size_t j, const ArrayX<Scalar>& v) { traj.row(n - 1 - Index(j)) = v; };

  if constexpr (std::is_same_v<std::decay_t<Source>, NoSource>) {
    detail::march(uT, rflux, NoSource{}, rspeed, Scalar(0), t_end - t_start, samples, opt, record);
  } else {
    auto rsource = [&](Scalar tau) -> ArrayX<Scalar> { return -source(t_end - tau); };
    detail::march(uT, rflux, rsource, rspeed, Scalar(0), t_end - t_start, samples, opt, record);
  }
  return traj;
}

/// First-order (midpoint) rule: sum_i f_i dxi.
template <typename Scalar>
Scalar quadrature(const CellField<Scalar>& f) {
  return f.values.sum() * f.grid.dxi();
}

/// sum_i m(xi_i) f_i dxi for a moment function m.
template <typename Scalar, typename Moment>
Scalar first_moment(const CellField<Scalar>& f, Moment&& moment) {
  Scalar acc(0);
  for (Index i = 0; i < f.values.size(); ++i) acc += moment(f.grid.center(i)) * f.values(i);
  return acc * f.grid.dxi();
}

}  // namespace mfstack
