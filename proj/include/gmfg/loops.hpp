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

// Outer fixed-point iteration on the population distribution: the exact
// best-response map, and the learning loops built from an inner solver, a
// smoothing operator, and a population advance.

#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/metrics.hpp"
#include "gmfg/model.hpp"
#include "gmfg/population.hpp"
#include "gmfg/rng.hpp"
#include "gmfg/smooth.hpp"
#include "gmfg/solvers/exact.hpp"
#include "gmfg/solvers/q_learning.hpp"
#include "gmfg/solvers/schedule.hpp"
#include "gmfg/solvers/trpo.hpp"

namespace gmfg {

// argmax_e of Q*_L per state.
inline Policy Gamma1Exact(const Model& model, const MeanField& L, double vi_tol = 1e-10) {
  model.CheckPopulation(L);
  const Mdp m(model, L);
  SmoothingConfig greedy;
  greedy.kind = SmoothingKind::kArgmaxE;
  return SmoothPolicy(ValueIteration(m, vi_tol).q, greedy);
}

inline MeanField GammaComposed(const Model& model, const MeanField& L, double vi_tol = 1e-10) {
  return Gamma2Exact(model, Gamma1Exact(model, L, vi_tol), L);
}

enum class InnerSolver {
  kExactVi,      // value-based, exact Q*
  kQSync,        // value-based, synchronous Q-learning
  kQAsync,       // value-based, asynchronous Q-learning
  kTrpo,         // policy-based
  kExactPolicy,  // policy-based, argmax_e of Q*
};

inline bool IsPolicyBased(InnerSolver s) { return s == InnerSolver::kTrpo || s == InnerSolver::kExactPolicy; }

inline const char* ToString(InnerSolver s) {
  switch (s) {
    case InnerSolver::kExactVi: return "exact_vi";
    case InnerSolver::kQSync: return "q_sync";
    case InnerSolver::kQAsync: return "q_async";
    case InnerSolver::kTrpo: return "trpo";
    case InnerSolver::kExactPolicy: return "exact_policy";
  }
  return "?";
}

inline InnerSolver ParseInnerSolver(const std::string& s) {
  if (s == "exact_vi") return InnerSolver::kExactVi;
  if (s == "q_sync") return InnerSolver::kQSync;
  if (s == "q_async") return InnerSolver::kQAsync;
  if (s == "trpo") return InnerSolver::kTrpo;
  if (s == "exact_policy") return InnerSolver::kExactPolicy;
  throw ConfigError("unknown inner solver '" + s + "'");
}

enum class TdMode { kSampled, kExact };

struct LoopConfig {
  int outer_iterations = 20;
  InnerSolver inner = InnerSolver::kQSync;
  // Sample budgets per outer iteration, counted in (s, a, s', r) samples;
  // 0 means 100 |S||A|. Synchronous solvers run budget / (|S||A|) sweeps.
  long inner_samples = 0;
  long td_samples = 0;
  // T_k = budget * (k + 1)^budget_growth.
  double budget_growth = 0.0;
  StepSchedule schedule = StepSchedule::Constant(0.01);
  double q_init = 0.0;
  AsyncOptions async;
  TrpoConfig trpo;
  TdMode td = TdMode::kSampled;
  SmoothingConfig smoothing;
  bool project = true;
  EpsNetConfig eps_net;
  std::optional<MeanField> initial;
  int weak_population = 0;  // N > 0 selects the weak simulator
  bool track_exploitability = true;
  MetricConfig metrics;
  double vi_tol = 1e-10;

  void Validate() const {
    if (outer_iterations < 0) throw ConfigError("loop: outer_iterations must be >= 0");
    if (inner_samples < 0 || td_samples < 0) throw ConfigError("loop: budgets must be >= 0");
    if (budget_growth < 0.0) throw ConfigError("loop: budget_growth must be >= 0");
    if (weak_population < 0) throw ConfigError("loop: weak_population must be >= 0");
    schedule.Validate();
    smoothing.Validate();
    eps_net.Validate();
  }
};

struct IterationRecord {
  int k = 0;
  MeanField population;  // L_k
  Policy policy;         // pi_k
  MeanField next;        // L_{k+1}
  double step_l1 = 0.0;  // ||L_{k+1} - L_k||_1
  double exploitability = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
  double min_action_gap = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::string, double>> summaries;  // of L_{k+1}
};

struct RunRecord {
  MeanField initial;
  bool snapped_initial = false;
  std::vector<IterationRecord> iterations;
  MeanField final_population;

  const Policy& final_policy() const { return iterations.back().policy; }
};

namespace detail {

inline long ScaledBudget(long base, double growth, int k) {
  return static_cast<long>(std::llround(static_cast<double>(base) * std::pow(k + 1.0, growth)));
}

}  // namespace detail

// One outer-loop run. The shape (value- or policy-based inner step,
// smoothing, projection, strong or weak advance) is taken from cfg.
inline RunRecord RunLoop(const Model& model, const LoopConfig& cfg, const Rng& rng) {
  cfg.Validate();
  const int ns = model.num_states(), na = model.num_actions();
  const long cells = static_cast<long>(ns) * na;
  const long base_inner = cfg.inner_samples > 0 ? cfg.inner_samples : 100 * cells;
  const long base_td = cfg.td_samples > 0 ? cfg.td_samples : 100 * cells;
  const int N = cfg.weak_population;

  RunRecord rec;
  MeanField L = cfg.initial ? *cfg.initial : MeanField::Uniform(ns, na);
  model.CheckPopulation(L);
  if (N > 0 && !IsEmpirical(L, N)) {
    L = SnapToEmpirical(L, N);
    rec.snapped_initial = true;
  } else if (N == 0 && cfg.project) {
    L = ProjectEpsNet(L, cfg.eps_net);
  }
  rec.initial = L;

  for (int k = 0; k < cfg.outer_iterations; ++k) {
    const auto start = std::chrono::steady_clock::now();
    Rng step_rng = rng.Stream(static_cast<std::uint64_t>(k));
    Rng inner_rng = step_rng.Stream("inner");
    const Mdp m(model, L);
    const long inner_budget = detail::ScaledBudget(base_inner, cfg.budget_growth, k);
    const long sweeps = std::max<long>(1, inner_budget / cells);

    QTable q;
    if (!IsPolicyBased(cfg.inner)) {
      switch (cfg.inner) {
        case InnerSolver::kExactVi: q = ValueIteration(m, cfg.vi_tol).q; break;
        case InnerSolver::kQSync: q = QLearningSync(m, sweeps, cfg.schedule, cfg.q_init, inner_rng); break;
        case InnerSolver::kQAsync: {
          AsyncOptions opt = cfg.async;
          opt.init = cfg.q_init;
          q = QLearningAsync(m, inner_budget, cfg.schedule, opt, inner_rng).q;
          break;
        }
        default: break;
      }
    } else {
      Policy inner_pi;
      if (cfg.inner == InnerSolver::kTrpo) {
        inner_pi = TrpoSolve(m, cfg.trpo, inner_rng).best;
      } else {
        SmoothingConfig greedy;
        greedy.kind = SmoothingKind::kArgmaxE;
        inner_pi = SmoothPolicy(ValueIteration(m, cfg.vi_tol).q, greedy);
      }
      if (cfg.td == TdMode::kExact) {
        q = EvaluatePolicy(m, inner_pi).q;
      } else {
        const long td_sweeps = std::max<long>(1, detail::ScaledBudget(base_td, cfg.budget_growth, k) / cells);
        Rng td_rng = step_rng.Stream("td");
        q = TdEvaluate(m, inner_pi, td_sweeps, cfg.schedule, cfg.q_init, td_rng);
      }
    }

    IterationRecord it;
    it.k = k;
    it.population = L;
    it.policy = SmoothPolicy(q, cfg.smoothing);
    it.min_action_gap = MinActionGap(q);

    MeanField next;
    if (N > 0) {
      Rng adv = step_rng.Stream("advance");
      const StateDist mu = L.StateMarginal();
      std::vector<std::int64_t> counts(static_cast<std::size_t>(cells), 0);
      for (int i = 0; i < N; ++i) {
        const int s = mu.Sample(adv);
        const int a = it.policy.Sample(s, adv);
        const int s2 = m.SampleNext(s, a, adv);
        const int a2 = it.policy.Sample(s2, adv);
        ++counts[static_cast<std::size_t>(s2) * na + a2];
      }
      next = FromCounts(ns, na, counts, N);
    } else {
      next = Gamma2(*model.Freeze(L), it.policy, L);
      if (cfg.project) next = ProjectEpsNet(next, cfg.eps_net);
    }
    it.next = next;
    it.step_l1 = L1Distance(next.weights(), L.weights());
    it.summaries = model.Summaries(next);
    if (cfg.track_exploitability && !model.transition_depends_on_population()) {
      it.exploitability = ExploitabilityMf(model, it.policy, cfg.metrics);
    }
    it.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    L = std::move(next);
    rec.iterations.push_back(std::move(it));
  }
  rec.final_population = L;
  return rec;
}

// GMF-V: value-based inner solver, smoothed policy, epsilon-net projection.
inline RunRecord GmfV(const Model& model, LoopConfig cfg, const Rng& rng) {
  if (IsPolicyBased(cfg.inner)) throw ConfigError("gmf_v: inner solver must be value-based");
  cfg.weak_population = 0;
  return RunLoop(model, cfg, rng);
}

// GMF-P: policy-based inner solver certified by TD evaluation.
inline RunRecord GmfP(const Model& model, LoopConfig cfg, const Rng& rng) {
  if (!IsPolicyBased(cfg.inner)) throw ConfigError("gmf_p: inner solver must be policy-based");
  cfg.weak_population = 0;
  return RunLoop(model, cfg, rng);
}

// Unsmoothed, unprojected loop.
inline RunRecord GmfNaive(const Model& model, LoopConfig cfg, const Rng& rng) {
  cfg.smoothing.kind = SmoothingKind::kArgmaxE;
  cfg.project = false;
  cfg.weak_population = 0;
  return RunLoop(model, cfg, rng);
}

// Weak-simulator loop on Emp_N (value- or policy-based by cfg.inner).
inline RunRecord GmfWeak(const Model& model, LoopConfig cfg, const Rng& rng) {
  if (cfg.weak_population < 1) throw ConfigError("gmf_weak: weak_population must be >= 1");
  cfg.project = false;
  return RunLoop(model, cfg, rng);
}

}  // namespace gmfg
