// Copyright 2026 The GMFG Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Planning with exact model access: value iteration and policy evaluation.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"

namespace gmfg {

struct ValueIterationResult {
  QTable q;
  std::vector<double> v;
  // sup-norm change per sweep
  std::vector<double> residuals;
};

// Iterates the Bellman optimality operator from Q = 0 until the sup-norm
// change drops below tol (1 - gamma) / gamma, so that ||Q - Q*|| <= tol.
inline ValueIterationResult ValueIteration(const Mdp& m, double tol = 1e-10) {
  if (!(tol > 0.0)) throw InvalidInput("value_iteration: tol must be > 0");
  const int ns = m.num_states(), na = m.num_actions();
  const double g = m.gamma();
  const double stop = tol * (1.0 - g) / g;
  ValueIterationResult out{QTable(ns, na, 0.0), std::vector<double>(ns, 0.0), {}};
  std::vector<double> v(ns, 0.0);
  for (;;) {
    double change = 0.0;
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        const auto row = m.Row(s, a);
        double ev = 0.0;
        for (int s2 = 0; s2 < ns; ++s2) ev += row[s2] * v[s2];
        const double next = m.R(s, a) + g * ev;
        change = std::max(change, std::abs(next - out.q(s, a)));
        out.q(s, a) = next;
      }
    }
    for (int s = 0; s < ns; ++s) v[s] = out.q.RowMax(s);
    out.residuals.push_back(change);
    if (change <= stop) break;
  }
  out.v = std::move(v);
  return out;
}

struct PolicyValue {
  QTable q;
  std::vector<double> v;
};

// Solves (I - gamma P^pi) V = r^pi, then Q = R + gamma P V.
inline PolicyValue EvaluatePolicy(const Mdp& m, const Policy& pi) {
  m.CheckPolicy(pi);
  const int ns = m.num_states(), na = m.num_actions();
  const double g = m.gamma();
  const StochasticMatrix P = m.Induced(pi);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(ns, ns);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    for (int s2 = 0; s2 < ns; ++s2) A(s, s2) -= g * P(s, s2);
    for (int a = 0; a < na; ++a) r(s) += pi(s, a) * m.R(s, a);
  }
  const Eigen::VectorXd v = A.partialPivLu().solve(r);
  PolicyValue out{QTable(ns, na), std::vector<double>(v.data(), v.data() + ns)};
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      const auto row = m.Row(s, a);
      double ev = 0.0;
      for (int s2 = 0; s2 < ns; ++s2) ev += row[s2] * out.v[s2];
      out.q(s, a) = m.R(s, a) + g * ev;
    }
  }
  return out;
}

inline double Expectation(std::span<const double> weights, std::span<const double> values) {
  if (weights.size() != values.size()) throw DimensionError("expectation: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * values[i];
  return acc;
}

}  // namespace gmfg
