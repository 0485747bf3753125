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

// Mean-field optimality cascade for a fixed leader control (no follower
// interaction). Four transport equations are solved in sequence:
//
//   q   = grad Psi  : q_t + (q^2/(2 gamma) - J^F(m(xi), v))_xi = 0,       q(T) = 0
//   g               : g_t + (q g / gamma)_xi = 0,                          g(0) = g0
//   p   = grad Phi1 : p_t + (p q / gamma)_xi = grad_m J^L(v, m_g) m'(xi),  p(T) = 0
//   phi2            : phi2_t + ((q phi2 - p g) / gamma)_xi = 0,            phi2(0) = 0
//
// and the reduced gradient of the leader objective with respect to v(t) is
//   grad_v J^L(v, m_g) + beta v - int grad_v J^F(m(xi), v) phi2 dxi.

#include <mfstack/grid.hpp>
#include <mfstack/problem.hpp>

#include <stdexcept>
#include <string>

namespace mfstack {

/// A sub-solve of the cascade failed; `stage()` names which one.
class CascadeError : public std::runtime_error {
 public:
  CascadeError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct MfocSolution {
  Trajectory q;     ///< gradient of the follower value function
  Trajectory g;     ///< follower density
  Trajectory p;     ///< gradient of the first leader multiplier
  Trajectory phi2;  ///< second leader multiplier
  Trajectory w;     ///< follower feedback control q / gamma
  Series m_g;       ///< first moment of g
};

Trajectory solve_psi_gradient(const ProblemSpec& spec, const Series& v);
Trajectory solve_density(const ProblemSpec& spec, const Trajectory& q);
Trajectory solve_phi1_gradient(const ProblemSpec& spec, const Series& v, const Trajectory& q, const Series& m_g);
Trajectory solve_phi2(const ProblemSpec& spec, const Trajectory& q, const Trajectory& p, const Trajectory& g);

/// First moment of every density snapshot.
Series moment_curve(const ProblemSpec& spec, const Trajectory& g);

/// Negative reduced gradient on the output time grid.
Series descent_direction(const ProblemSpec& spec, const Series& v, const Series& m_g, const Trajectory& phi2);

/// Left-endpoint quadrature of J^L + beta/2 v^2 over the output grid.
double leader_objective(const ProblemSpec& spec, const Series& v, const Series& m_g);

MfocSolution run_cascade(const ProblemSpec& spec, const Series& v);

/// Leader objective of the cascade response to v (forward stages only).
double reduced_objective(const ProblemSpec& spec, const Series& v);

}  // namespace mfstack
