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

// N-agent verification layer: per-follower Pontryagin two-point boundary
// value problems, particle pushes under a mean-field feedback, and the
// particle-vs-PDE consistency checks.

#include <mfstack/cascade.hpp>
#include <mfstack/problem.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfstack {

/// Shooting failed: singular sensitivity (conjugate point) or no convergence.
class ShootingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TpbvpSolution {
  Series xi;   ///< state on the output grid
  Series psi;  ///< costate on the output grid
  /// RK4 nodes (output grid refined `substeps` times) for residual checks.
  std::vector<double> fine_t;
  std::vector<double> fine_xi;
  std::vector<double> fine_psi;
  int iterations{0};
  double sensitivity{0.0};  ///< d psi(T) / d psi(0) at the final secant pair
};

/// xi' = -psi/gamma, psi' = -m'(xi) grad_m J^F(m(xi), v(t)), xi(0) = xi0, psi(T) = 0.
/// Single shooting on psi(0) with RK4 and secant updates.
TpbvpSolution solve_follower_tpbvp(const ProblemSpec& spec, double xi0, const Series& v, int substeps = 8);

/// Positions and costates of N followers with their output-time trajectories.
struct ParticleEnsemble {
  Times times;
  ArrayX<double> xi;         ///< current positions, wrapped into [xi_min, xi_max)
  ArrayX<double> psi;        ///< current costates
  RowMatrixX<double> xi_traj;   ///< n_t x N
  RowMatrixX<double> psi_traj;  ///< n_t x N

  Index size() const { return xi.size(); }
  static ParticleEnsemble at_rest(const Times& times, ArrayX<double> positions);
};

/// xi_i' = 1/N sum_j P(xi_i, xi_j)(xi_j - xi_i) + w(t, xi_i), RK4 with at
/// least 4 n_t steps, w bilinear in (t, xi) with periodic wrap.
ParticleEnsemble push_particles(const ProblemSpec& spec, const ParticleEnsemble& ensemble, const Trajectory& w);

/// Histogram density count_i / (N dxi).
Field empirical_density(const Grid& grid, const ArrayX<double>& positions);
Field empirical_density(const ParticleEnsemble& ensemble, const Grid& grid);

/// Inverse-CDF samples from the piecewise-constant normalized g0.
ArrayX<double> sample_initial_positions(const ProblemSpec& spec, Index n, std::uint64_t seed);

struct SampleResidual {
  double xi0{0.0};
  double max_residual{0.0};  ///< max_t |psi(t) + q(t, xi(t))|
  std::optional<std::string> error;
  std::optional<TpbvpSolution> path;
};

struct ConsistencyReport {
  std::vector<SampleResidual> samples;
  double max_residual{0.0};
  double mean_residual{0.0};
  ArrayX<double> residual_profile;  ///< max over samples at each output time
  /// Largest costate difference between samples sharing the same xi0.
  double duplicate_psi_spread{0.0};
};

ConsistencyReport consistency_residual(const ProblemSpec& spec, const MfocSolution& solution,
                                       const std::vector<double>& xi0_samples, const Series& v);

/// L1 distance between the empirical density of pushed particles and g at each output time.
Series density_gap(const ProblemSpec& spec, const Trajectory& g, const Trajectory& w, Index n, std::uint64_t seed);
Series density_gap(const ProblemSpec& spec, const MfocSolution& solution, Index n, std::uint64_t seed);

}  // namespace mfstack
