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

// Sample-based value learning on a frozen MDP: synchronous and asynchronous
// Q-learning and synchronous TD(0) policy evaluation.

#pragma once

#include <cstdint>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"
#include "gmfg/rng.hpp"
#include "gmfg/solvers/schedule.hpp"

namespace gmfg {

// Index of a maximal entry; exact ties are broken uniformly at random.
inline int GreedyAction(std::span<const double> row, Rng& rng) {
  int best = 0, ties = 1;
  for (int a = 1; a < static_cast<int>(row.size()); ++a) {
    if (row[a] > row[best]) {
      best = a;
      ties = 1;
    } else if (row[a] == row[best] && rng.Below(++ties) == 0) {
      best = a;
    }
  }
  return best;
}

// T synchronous sweeps: every (s, a) gets one fresh (s', r) sample and
//   Q(s,a) <- (1 - b_l) Q(s,a) + b_l (r + gamma max_a' Q(s',a')).
inline QTable QLearningSync(const Mdp& m, long sweeps, const StepSchedule& schedule, double init, Rng& rng) {
  schedule.Validate();
  const int ns = m.num_states(), na = m.num_actions();
  const double g = m.gamma();
  QTable q(ns, na, init);
  std::vector<double> v(ns);
  for (long l = 0; l < sweeps; ++l) {
    for (int s = 0; s < ns; ++s) v[s] = q.RowMax(s);
    const double b = schedule(l);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        const int s2 = m.SampleNext(s, a, rng);
        const double r = m.SampleReward(s, a, rng);
        q(s, a) += b * (r + g * v[s2] - q(s, a));
      }
    }
  }
  return q;
}

struct AsyncOptions {
  double epsilon = 0.1;
  double init = 0.0;
  // Probability of jumping to a uniformly random state after each step.
  double restart_prob = 0.0;
};

struct AsyncResult {
  QTable q;
  std::vector<std::int64_t> visits;  // #(s, a, T)
};

// Single trajectory from a uniform start; only the visited pair moves, with
// step b = (#(s,a) + 1)^-h (polynomial) or eta (constant).
inline AsyncResult QLearningAsync(const Mdp& m, long steps, const StepSchedule& schedule,
                                  const AsyncOptions& opt, Rng& rng) {
  schedule.Validate();
  if (!(opt.epsilon >= 0.0 && opt.epsilon <= 1.0)) throw ConfigError("q_learning_async: epsilon in [0,1]");
  const int ns = m.num_states(), na = m.num_actions();
  const double g = m.gamma();
  AsyncResult out{QTable(ns, na, opt.init), std::vector<std::int64_t>(static_cast<std::size_t>(ns) * na, 0)};
  int s = static_cast<int>(rng.Below(ns));
  for (long t = 0; t < steps; ++t) {
    const int a = rng.Bernoulli(opt.epsilon) ? static_cast<int>(rng.Below(na)) : GreedyAction(out.q.row(s), rng);
    const int s2 = m.SampleNext(s, a, rng);
    const double r = m.SampleReward(s, a, rng);
    auto& count = out.visits[static_cast<std::size_t>(s) * na + a];
    const double b = schedule(count++);
    out.q(s, a) += b * (r + g * out.q.RowMax(s2) - out.q(s, a));
    s = (opt.restart_prob > 0.0 && rng.Bernoulli(opt.restart_prob)) ? static_cast<int>(rng.Below(ns)) : s2;
  }
  return out;
}

// Synchronous TD(0) estimate of Q^pi with a' ~ pi(s').
inline QTable TdEvaluate(const Mdp& m, const Policy& pi, long sweeps, const StepSchedule& schedule, double init,
                         Rng& rng) {
  schedule.Validate();
  m.CheckPolicy(pi);
  const int ns = m.num_states(), na = m.num_actions();
  const double g = m.gamma();
  QTable q(ns, na, init);
  QTable prev = q;
  for (long l = 0; l < sweeps; ++l) {
    prev = q;
    const double b = schedule(l);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        const int s2 = m.SampleNext(s, a, rng);
        const double r = m.SampleReward(s, a, rng);
        const int a2 = pi.Sample(s2, rng);
        q(s, a) += b * (r + g * prev(s2, a2) - q(s, a));
      }
    }
  }
  return q;
}

}  // namespace gmfg
