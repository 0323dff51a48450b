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


// Diagnostics: N-player exploitability by simulation, contraction ratios of
// the exact composed map, and plug-in Lipschitz bounds of the kernel.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "gmfg/baselines.hpp"
#include "gmfg/dist.hpp"
#include "gmfg/envs/nplayer.hpp"
#include "gmfg/loops.hpp"
#include "gmfg/metrics.hpp"
#include "gmfg/model.hpp"
#include "gmfg/parallel.hpp"
#include "gmfg/rng.hpp"
#include "gmfg/smooth.hpp"
#include "gmfg/solvers/q_learning.hpp"
#include "gmfg/solvers/schedule.hpp"
#include "gmfg/solvers/trpo.hpp"

namespace gmfg {

// ---------------------------------------------------------------------------
// N-player exploitability

struct NExploitability {
  double value = 0.0;      // mean normalized gap
  double std_error = 0.0;  // across sampled initial profiles
  int profiles = 0;
  int players = 0;  // players scored per profile
  bool wide_ci = false;
};

// A 90% half-width above this (absolute or relative to the mean) sets wide_ci.
inline constexpr double kWideCiAbs = 0.01;
inline constexpr double kWideCiRel = 0.25;

namespace detail {

struct NPlayerSim {
  const NPlayerPricing& game;
  const NPlayerPolicyProfile& profile;
  std::vector<int> states, actions, context;
  std::vector<double> rewards;

  NPlayerSim(const NPlayerPricing& g, const NPlayerPolicyProfile& p)
      : game(g), profile(p), states(g.num_players()), actions(g.num_players()),
        context(g.num_players(), p.InitialContext()), rewards(g.num_players()) {}

  // One step with player `dev` choosing dev_action instead of following the profile.
  void Step(int dev, int dev_action, Rng& rng) {
    const int N = game.num_players();
    const PricingParams& p = game.params();
    for (int j = 0; j < N; ++j) {
      actions[j] = j == dev ? dev_action : profile.Act(j, context[j], states[j], rng);
    }
    double sum_q = 0.0;
    for (int a : actions) sum_q += p.QOf(a);
    game.StepInPlace(states, actions, rewards);
    if (profile.bins() > 1) {
      for (int j = 0; j < N; ++j) {
        context[j] = profile.Context(N > 1 ? (sum_q - p.QOf(actions[j])) / (N - 1) : 0.0);
      }
    }
  }
};

}  // namespace detail

// Probability that the deviating player's inventory is redrawn uniformly
// before a learning step, so that rarely reached inventories are covered.
inline constexpr double kBestResponseRestart = 0.1;

// Q-table of player i's best response over its own inventory, learned by
// off-policy Q-learning while player i acts uniformly at random and the
// others follow the profile.
inline QTable LearnNPlayerBestResponse(const NPlayerPricing& game, const NPlayerPolicyProfile& profile, int player,
                                       long steps, Rng& rng) {
  const int ns = game.num_states(), na = game.num_actions();
  const double gamma = game.model().gamma();
  const StepSchedule schedule = StepSchedule::Polynomial(0.7);
  detail::NPlayerSim sim(game, profile);
  for (int& s : sim.states) s = static_cast<int>(rng.Below(ns));
  QTable q(ns, na, 0.0);
  std::vector<std::int64_t> visits(static_cast<std::size_t>(ns) * na, 0);
  for (long t = 0; t < steps; ++t) {
    if (rng.Bernoulli(kBestResponseRestart)) sim.states[player] = static_cast<int>(rng.Below(ns));
    const int s = sim.states[player];
    const int a = static_cast<int>(rng.Below(na));
    sim.Step(player, a, rng);
    const double b = schedule(visits[static_cast<std::size_t>(s) * na + a]++);
    q(s, a) += b * (sim.rewards[player] + gamma * q.RowMax(sim.states[player]) - q(s, a));
  }
  return q;
}

// Discounted return of `player` from the joint initial state s0, averaged
// over `rollouts` truncated episodes. A non-null deviation replaces the
// player's profile policy.
inline double NPlayerRolloutValue(const NPlayerPricing& game, const NPlayerPolicyProfile& profile, int player,
                                  const Policy* deviation, const std::vector<int>& s0, int rollouts, int horizon,
                                  Rng& rng) {
  detail::NPlayerSim sim(game, profile);
  const double gamma = game.model().gamma();
  double total = 0.0;
  for (int r = 0; r < rollouts; ++r) {
    sim.states = s0;
    std::fill(sim.context.begin(), sim.context.end(), profile.InitialContext());
    double disc = 1.0, ret = 0.0;
    for (int t = 0; t < horizon; ++t) {
      const int own = sim.states[player];
      const int a = deviation != nullptr ? deviation->Sample(own, rng) : -1;
      sim.Step(deviation != nullptr ? player : -1, a, rng);
      ret += disc * sim.rewards[player];
      disc *= gamma;
    }
    total += ret;
  }
  return total / rollouts;
}

// Monte-Carlo estimate of
//   C(pi) = mean_i mean_{s in S^N} (max_pi' V^i(s, (pi^-i, pi')) - V^i(s, pi)) / (|max ...| + eps0)
// over uniformly drawn initial profiles. The deviating value is the better
// of the learned best response and the player's own policy; both use common
// random numbers.
inline NExploitability ExploitabilityN(const NPlayerPricing& game, const NPlayerPolicyProfile& profile,
                                       const MetricConfig& cfg, const Rng& seed) {
  cfg.Validate();
  const int N = game.num_players(), ns = game.num_states(), na = game.num_actions();
  if (profile.num_players() != N) throw DimensionError("exploitability_n: profile size != N");
  const int horizon = RolloutHorizon(game.model().gamma(), game.model().r_max(), cfg.rollout_tol);

  // Which players are scored.
  std::vector<int> players(N);
  for (int i = 0; i < N; ++i) players[i] = i;
  if (cfg.br_players > 0 && cfg.br_players < N) {
    Rng pick = seed.Stream("exploitability_n/players");
    std::shuffle(players.begin(), players.end(), pick);
    players.resize(cfg.br_players);
    std::sort(players.begin(), players.end());
  }
  const int m = static_cast<int>(players.size());

  // Best responses; exchangeable players share one.
  const int distinct = profile.symmetric() ? 1 : m;
  std::vector<Policy> br(distinct);
  ParallelFor(distinct, cfg.threads, [&](long k) {
    Rng rng = seed.Stream("exploitability_n/br").Stream(static_cast<std::uint64_t>(players[k]));
    const QTable q = LearnNPlayerBestResponse(game, profile, players[k], cfg.br_steps, rng);
    std::vector<int> greedy(ns);
    for (int s = 0; s < ns; ++s) greedy[s] = GreedyAction(q.row(s), rng);
    br[k] = Policy::Deterministic(na, greedy);
  });

  std::vector<double> gaps(cfg.mc_profiles);
  ParallelFor(cfg.mc_profiles, cfg.threads, [&](long j) {
    const Rng base = seed.Stream("exploitability_n/profile").Stream(static_cast<std::uint64_t>(j));
    Rng draw = base.Stream("s0");
    std::vector<int> s0(N);
    for (int& s : s0) s = static_cast<int>(draw.Below(ns));
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      const int i = players[k];
      Rng own_rng = base.Stream(static_cast<std::uint64_t>(i));
      Rng dev_rng = own_rng;
      const double own = NPlayerRolloutValue(game, profile, i, nullptr, s0, cfg.rollouts, horizon, own_rng);
      const double dev = NPlayerRolloutValue(game, profile, i, &br[profile.symmetric() ? 0 : k], s0, cfg.rollouts,
                                             horizon, dev_rng);
      const double best = std::max(own, dev);
      acc += (best - own) / (std::abs(best) + cfg.eps0);
    }
    gaps[j] = acc / m;
  });

  NExploitability out;
  out.profiles = cfg.mc_profiles;
  out.players = m;
  double mean = 0.0;
  for (double g : gaps) mean += g;
  mean /= cfg.mc_profiles;
  double var = 0.0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  var = cfg.mc_profiles > 1 ? var / (cfg.mc_profiles - 1) : 0.0;
  out.value = mean;
  out.std_error = std::sqrt(var / cfg.mc_profiles);
  const double half = 1.645 * out.std_error;
  out.wide_ci = cfg.mc_profiles < 2 || half > kWideCiAbs || half > kWideCiRel * mean;
  return out;
}

// ---------------------------------------------------------------------------
// Contraction of the composed map

struct ContractionReport {
  std::vector<double> ratios;
  double max = 0.0;
  double mean = 0.0;
  int excluded = 0;  // pairs with ||L1 - L2||_1 below kMinPairDistance
  double bin_width = 0.05;
  std::vector<int> histogram;  // counts over [k w, (k+1) w)
};

inline constexpr double kMinPairDistance = 1e-9;

inline ContractionReport ContractionFromPairs(const Model& model, const std::vector<std::pair<MeanField, MeanField>>& pairs,
                                              int threads = 1, double vi_tol = 1e-10) {
  std::vector<double> ratio(pairs.size(), -1.0);
  ParallelFor(static_cast<long>(pairs.size()), threads, [&](long j) {
    const auto& [a, b] = pairs[j];
    const double d = L1Distance(a.weights(), b.weights());
    if (d < kMinPairDistance) return;
    const MeanField ga = GammaComposed(model, a, vi_tol);
    const MeanField gb = GammaComposed(model, b, vi_tol);
    ratio[j] = L1Distance(ga.weights(), gb.weights()) / d;
  });
  ContractionReport rep;
  for (double r : ratio) {
    if (r < 0.0) {
      ++rep.excluded;
      continue;
    }
    rep.ratios.push_back(r);
  }
  if (!rep.ratios.empty()) {
    double sum = 0.0;
    for (double r : rep.ratios) {
      rep.max = std::max(rep.max, r);
      sum += r;
    }
    rep.mean = sum / rep.ratios.size();
  }
  rep.histogram.assign(static_cast<std::size_t>(std::floor(rep.max / rep.bin_width)) + 1, 0);
  for (double r : rep.ratios) ++rep.histogram[static_cast<std::size_t>(std::floor(r / rep.bin_width))];
  return rep;
}

// Ratios ||Gamma(L1) - Gamma(L2)||_1 / ||L1 - L2||_1 for n_pairs populations
// drawn uniformly from the simplex over S x A.
inline ContractionReport Contraction(const Model& model, int n_pairs, const Rng& seed, int threads = 1) {
  if (n_pairs < 0) throw ConfigError("contraction: n_pairs must be >= 0");
  const int ns = model.num_states(), na = model.num_actions();
  std::vector<std::pair<MeanField, MeanField>> pairs;
  pairs.reserve(n_pairs);
  for (int j = 0; j < n_pairs; ++j) {
    Rng rng = seed.Stream("contraction").Stream(static_cast<std::uint64_t>(j));
    MeanField a = MeanField::RandomUniform(ns, na, rng);
    MeanField b = MeanField::RandomUniform(ns, na, rng);
    pairs.emplace_back(std::move(a), std::move(b));
  }
  return ContractionFromPairs(model, pairs, threads);
}

// ---------------------------------------------------------------------------
// Plug-in kernel bounds

struct AssumptionBounds {
  double c1 = 0.0;  // max P(s' | s, a, L)
  double c2 = 0.0;  // Lipschitz constant of L -> P(. | s, a, L)
  double d2 = 0.0;
  double d3 = 0.0;
};

// c1 is a max over sample_size random populations. c2 compares consecutive
// samples: the numerator is W1 over S (exact on 1-D embeddings, diam(S) TV
// otherwise) and the denominator the lower bound d_min(S x A) TV <= W1 over
// S x A, so the reported c2 can only overstate the true constant.
inline AssumptionBounds ComputeAssumptionBounds(const Model& model, int sample_size, const Rng& seed) {
  if (sample_size < 1) throw ConfigError("assumption_bounds: sample_size must be >= 1");
  const FiniteSpace& S = model.state_space();
  const FiniteSpace& A = model.action_space();
  const int ns = S.size(), na = A.size();
  double d_min_sa = std::numeric_limits<double>::infinity();
  if (ns > 1) d_min_sa = std::min(d_min_sa, S.d_min());
  if (na > 1) d_min_sa = std::min(d_min_sa, A.d_min());

  Rng rng = seed.Stream("assumption_bounds");
  AssumptionBounds out;
  std::vector<double> row_prev(ns), row(ns);
  std::unique_ptr<FrozenModel> prev;
  MeanField prev_L;
  for (int j = 0; j < sample_size; ++j) {
    MeanField L = MeanField::RandomUniform(ns, na, rng);
    auto frozen = model.Freeze(L);
    const double denom = prev ? d_min_sa * TvDistance(L.weights(), prev_L.weights()) : 0.0;
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        frozen->Transition(s, a, row);
        for (double x : row) out.c1 = std::max(out.c1, x);
        if (!prev || !(denom > 0.0)) continue;
        prev->Transition(s, a, row_prev);
        const double num = S.dim() == 1 ? W1Distance1d(row, row_prev, S) : S.diam() * TvDistance(row, row_prev);
        out.c2 = std::max(out.c2, num / denom);
      }
    }
    prev = std::move(frozen);
    prev_L = std::move(L);
  }
  out.d2 = na > 1 ? 2.0 * S.diam() * A.diam() * ns * out.c1 / A.d_min() : std::numeric_limits<double>::infinity();
  out.d3 = S.diam() * A.diam() * out.c2 / 2.0;
  return out;
}

}  // namespace gmfg
