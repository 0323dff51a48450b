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

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"
#include "gmfg/solvers/exact.hpp"
#include "gmfg/solvers/q_learning.hpp"

namespace gmfg {

enum class BestResponseMethod { kExactVi, kLearned };

inline const char* ToString(BestResponseMethod m) {
  return m == BestResponseMethod::kExactVi ? "exact_vi" : "learned";
}

inline BestResponseMethod ParseBestResponseMethod(const std::string& s) {
  if (s == "exact_vi") return BestResponseMethod::kExactVi;
  if (s == "learned") return BestResponseMethod::kLearned;
  throw ConfigError("unknown best-response method '" + s + "'");
}

struct MetricConfig {
  double eps0 = 0.1;
  double vi_tol = 1e-10;
  BestResponseMethod br_method = BestResponseMethod::kExactVi;
  long br_sweeps = 2000;  // learned mean-field best response
  // N-player estimate.
  int mc_profiles = 100;
  long br_steps = 100000;
  int br_players = 0;  // players per estimate; 0 means all of them
  int rollouts = 20;
  double rollout_tol = 1e-3;
  int threads = 1;

  void Validate() const {
    if (!(eps0 > 0.0)) throw ConfigError("metrics: eps0 must be > 0");
    if (mc_profiles < 1 || rollouts < 1 || br_steps < 0 || br_sweeps < 0 || br_players < 0) {
      throw ConfigError("metrics: budgets must be positive");
    }
    if (!(rollout_tol > 0.0)) throw ConfigError("metrics: rollout_tol must be > 0");
    if (threads < 1) throw ConfigError("metrics: threads must be >= 1");
  }
};

struct MfExploitability {
  double value;
  StateDist mu;
  MeanField population;
  double best_response_value;
  double policy_value;
};

// Normalized gap between the best response and pi, both evaluated at the
// stationary population (mu, pi) with mu invariant under P^pi.
inline MfExploitability ExploitabilityMfDetail(const Model& model, const Policy& pi, const MetricConfig& cfg = {}) {
  cfg.Validate();
  if (model.transition_depends_on_population()) {
    throw Error("exploitability_mf: " + model.name() +
                " has a population-dependent kernel; a mean-field matching term would be required");
  }
  const int ns = model.num_states(), na = model.num_actions();
  const Mdp any(model, MeanField::Uniform(ns, na));
  const StateDist mu = InvariantDistribution(any.Induced(pi));
  const MeanField L = MeanField::FromPolicy(mu, pi);
  const Mdp m(model, L);
  const auto pv = EvaluatePolicy(m, pi);
  const double own = Expectation(mu.weights(), pv.v);
  double best;
  if (cfg.br_method == BestResponseMethod::kExactVi) {
    best = Expectation(mu.weights(), ValueIteration(m, cfg.vi_tol).v);
  } else {
    // Greedy policy of a sampled Q-learning run, scored exactly; the policy
    // itself is a feasible deviation, so the better of the two is kept.
    Rng rng = Rng(0).Stream("exploitability_mf/learned");
    const QTable q = QLearningSync(m, cfg.br_sweeps, StepSchedule::Polynomial(0.7), 0.0, rng);
    std::vector<int> greedy(ns);
    for (int s = 0; s < ns; ++s) greedy[s] = GreedyAction(q.row(s), rng);
    best = std::max(own, Expectation(mu.weights(), EvaluatePolicy(m, Policy::Deterministic(na, greedy)).v));
  }
  const double gap = std::max(best - own, 0.0) / (std::abs(best) + cfg.eps0);
  return {gap, mu, L, best, own};
}

inline double ExploitabilityMf(const Model& model, const Policy& pi, const MetricConfig& cfg = {}) {
  return ExploitabilityMfDetail(model, pi, cfg).value;
}

}  // namespace gmfg
