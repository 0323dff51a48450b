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


// Independent learners and mean-field-action Q-learning for the N-player
// pricing game. Each player runs asynchronous Q-learning on its own stream;
// MF-Q augments the state with the binned average production of the other
// players at the previous step. IL is the single-bin case.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/envs/nplayer.hpp"
#include "gmfg/model.hpp"
#include "gmfg/rng.hpp"
#include "gmfg/smooth.hpp"
#include "gmfg/solvers/q_learning.hpp"
#include "gmfg/solvers/schedule.hpp"

namespace gmfg {

// Per-player policies, one per mean-action context. A context is the bin of
// the other players' average production at the previous step; the first step
// uses the bin holding the midpoint of [q_min, q_max].
class NPlayerPolicyProfile {
 public:
  NPlayerPolicyProfile() = default;
  NPlayerPolicyProfile(int bins, double q_lo, double q_hi, std::vector<std::vector<Policy>> policies)
      : bins_(bins), q_lo_(q_lo), q_hi_(q_hi), policies_(std::move(policies)) {
    if (bins_ < 1) throw ConfigError("profile: bins must be >= 1");
    if (policies_.empty()) throw InvalidInput("profile: no players");
    for (const auto& per : policies_) {
      if (static_cast<int>(per.size()) != bins_) throw DimensionError("profile: one policy per context");
    }
    BuildSamplers();
  }

  // Every player follows pi regardless of context.
  static NPlayerPolicyProfile Symmetric(int num_players, const Policy& pi) {
    NPlayerPolicyProfile out(1, 0.0, 1.0, std::vector<std::vector<Policy>>(num_players, {pi}));
    out.symmetric_ = true;
    return out;
  }

  // True when built by Symmetric(): all players are exchangeable.
  bool symmetric() const { return symmetric_; }

  int num_players() const { return static_cast<int>(policies_.size()); }
  int bins() const { return bins_; }
  const Policy& policy(int player, int context) const { return policies_[player][context]; }

  int Context(double mean_q) const { return MeanActionBin(mean_q, bins_, q_lo_, q_hi_); }
  int InitialContext() const { return Context(0.5 * (q_lo_ + q_hi_)); }

  int Act(int player, int context, int s, Rng& rng) const {
    const Sampler& smp = samplers_[(static_cast<std::size_t>(player) * bins_ + context)];
    const auto& row = smp.rows[s];
    if (row.size() == 1) return row.front().second;
    const double u = rng.Uniform();
    for (std::size_t i = 0; i + 1 < row.size(); ++i) {
      if (u < row[i].first) return row[i].second;
    }
    return row.back().second;
  }

  // Equal-width bins over [lo, hi]; values outside are clamped.
  static int MeanActionBin(double x, int bins, double lo, double hi) {
    if (bins <= 1 || hi <= lo) return 0;
    const int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
  }

 private:
  struct Sampler {
    std::vector<std::vector<std::pair<double, int>>> rows;  // (cdf, action) over the support
  };

  void BuildSamplers() {
    samplers_.clear();
    for (const auto& per : policies_) {
      for (const Policy& pi : per) {
        Sampler smp;
        for (int s = 0; s < pi.num_states(); ++s) {
          std::vector<std::pair<double, int>> row;
          double acc = 0.0;
          for (int a = 0; a < pi.num_actions(); ++a) {
            if (pi(s, a) <= 0.0) continue;
            acc += pi(s, a);
            row.emplace_back(acc, a);
          }
          smp.rows.push_back(std::move(row));
        }
        samplers_.push_back(std::move(smp));
      }
    }
  }

  int bins_ = 1;
  double q_lo_ = 0.0;
  double q_hi_ = 1.0;
  std::vector<std::vector<Policy>> policies_;
  std::vector<Sampler> samplers_;
  bool symmetric_ = false;
};

struct BaselineConfig {
  int rounds = 20;
  // Game steps per round; 0 means ceil(100 |S||A| / N), so a round draws
  // about as many samples as one outer iteration of the mean-field loops.
  long steps_per_round = 0;
  StepSchedule schedule = StepSchedule::Polynomial(0.7);
  double eps_start = 0.1;
  double eps_end = 0.01;
  double q_init = 0.0;
  int bins = 10;  // MF-Q contexts

  void Validate() const {
    if (rounds < 0 || steps_per_round < 0) throw ConfigError("baseline: rounds and steps must be >= 0");
    if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) {
      throw ConfigError("baseline: exploration rates must lie in [0, 1]");
    }
    schedule.Validate();
  }

  long ResolvedSteps(int num_states, int num_actions, int num_players) const {
    if (steps_per_round > 0) return steps_per_round;
    const long cells = static_cast<long>(num_states) * num_actions;
    return (100 * cells + num_players - 1) / num_players;
  }
};

using RoundCallback = std::function<void(int round, const NPlayerPolicyProfile&)>;

namespace detail {

inline NPlayerPolicyProfile GreedyProfile(const std::vector<QTable>& q, int bins, int ns, const PricingParams& p) {
  SmoothingConfig greedy;
  greedy.kind = SmoothingKind::kArgmaxE;
  std::vector<std::vector<Policy>> out;
  for (const QTable& t : q) {
    std::vector<Policy> per;
    for (int c = 0; c < bins; ++c) {
      std::vector<double> rows;
      for (int s = 0; s < ns; ++s) {
        const auto r = ArgmaxE(t.row(c * ns + s));
        rows.insert(rows.end(), r.begin(), r.end());
      }
      per.emplace_back(ns, t.num_actions(), std::move(rows));
    }
    out.push_back(std::move(per));
  }
  return NPlayerPolicyProfile(bins, p.q_min, p.q_max, std::move(out));
}

// Shared trainer: Q-tables indexed by (context, own state, own action).
inline NPlayerPolicyProfile TrainMeanActionQ(const NPlayerPricing& game, const BaselineConfig& cfg, int bins,
                                             const Rng& seed, const RoundCallback& on_round) {
  cfg.Validate();
  Rng rng = seed.Stream("baseline");
  const int N = game.num_players(), ns = game.num_states(), na = game.num_actions();
  const PricingParams& p = game.params();
  const long steps = cfg.ResolvedSteps(ns, na, N);
  const long total = steps * cfg.rounds;
  const double gamma = game.model().gamma();

  std::vector<QTable> q(N, QTable(bins * ns, na, cfg.q_init));
  std::vector<std::vector<std::int64_t>> visits(N, std::vector<std::int64_t>(static_cast<std::size_t>(bins) * ns * na));
  std::vector<int> states(N), actions(N), context(N), rows(N);
  std::vector<double> rewards(N);
  for (int& s : states) s = static_cast<int>(rng.Below(ns));
  const int first = NPlayerPolicyProfile::MeanActionBin(0.5 * (p.q_min + p.q_max), bins, p.q_min, p.q_max);
  std::fill(context.begin(), context.end(), first);

  long t = 0;
  for (int round = 0; round < cfg.rounds; ++round) {
    for (long step = 0; step < steps; ++step, ++t) {
      const double frac = total > 1 ? static_cast<double>(t) / static_cast<double>(total - 1) : 1.0;
      const double eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
      for (int i = 0; i < N; ++i) {
        rows[i] = context[i] * ns + states[i];
        actions[i] = rng.Bernoulli(eps) ? static_cast<int>(rng.Below(na)) : GreedyAction(q[i].row(rows[i]), rng);
      }
      double sum_q = 0.0;
      for (int a : actions) sum_q += p.QOf(a);
      game.StepInPlace(states, actions, rewards);
      for (int i = 0; i < N; ++i) {
        const double others = N > 1 ? (sum_q - p.QOf(actions[i])) / (N - 1) : 0.0;
        context[i] = NPlayerPolicyProfile::MeanActionBin(others, bins, p.q_min, p.q_max);
        const int next_row = context[i] * ns + states[i];
        auto& count = visits[i][static_cast<std::size_t>(rows[i]) * na + actions[i]];
        const double b = cfg.schedule(count++);
        double& cell = q[i](rows[i], actions[i]);
        cell += b * (rewards[i] + gamma * q[i].RowMax(next_row) - cell);
      }
    }
    if (on_round) on_round(round, GreedyProfile(q, bins, ns, p));
  }
  return GreedyProfile(q, bins, ns, p);
}

}  // namespace detail

// Independent learners: every player ignores the others.
inline NPlayerPolicyProfile IlTrain(const NPlayerPricing& game, const BaselineConfig& cfg, const Rng& rng,
                                    const RoundCallback& on_round = nullptr) {
  return detail::TrainMeanActionQ(game, cfg, 1, rng, on_round);
}

// Mean-field Q-learning with cfg.bins mean-action contexts.
inline NPlayerPolicyProfile MfqTrain(const NPlayerPricing& game, const BaselineConfig& cfg, const Rng& rng,
                                     const RoundCallback& on_round = nullptr) {
  if (cfg.bins < 2) throw ConfigError("mfq: the mean-action grid needs at least 2 bins");
  return detail::TrainMeanActionQ(game, cfg, cfg.bins, rng, on_round);
}

}  // namespace gmfg
