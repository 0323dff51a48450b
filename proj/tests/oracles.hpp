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

// Independent reference computations used by the test suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmfg/dist.hpp"
#include "gmfg/envs/nplayer.hpp"
#include "gmfg/model.hpp"
#include "gmfg/rng.hpp"

namespace gmfg::testing {

// Optimal transport cost between x and y under `cost` by successive shortest
// augmenting paths on the bipartite flow network (Bellman-Ford on the
// residual graph). Knows nothing about the geometry of the supports.
inline double TransportLp(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(x.size()), m = static_cast<int>(y.size());
  const int src = n + m, dst = n + m + 1, nodes = n + m + 2;
  struct Edge {
    int to;
    double cap, cost;
    int rev;
  };
  std::vector<std::vector<Edge>> g(nodes);
  auto add = [&](int u, int v, double cap, double c) {
    g[u].push_back({v, cap, c, static_cast<int>(g[v].size())});
    g[v].push_back({u, 0.0, -c, static_cast<int>(g[u].size()) - 1});
  };
  for (int i = 0; i < n; ++i) add(src, i, x[i], 0.0);
  for (int j = 0; j < m; ++j) add(n + j, dst, y[j], 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) add(i, n + j, 2.0, cost[i][j]);
  }
  double total = 0.0, flow = 0.0, sx = 0.0, sy = 0.0;
  for (double v : x) sx += v;
  for (double v : y) sy += v;
  const double target = std::min(sx, sy) - 1e-13;
  const double inf = std::numeric_limits<double>::infinity();
  while (flow < target) {
    std::vector<double> dist(nodes, inf);
    std::vector<int> pv(nodes, -1), pe(nodes, -1);
    dist[src] = 0.0;
    for (int round = 0; round < nodes; ++round) {
      bool changed = false;
      for (int u = 0; u < nodes; ++u) {
        if (dist[u] == inf) continue;
        for (int e = 0; e < static_cast<int>(g[u].size()); ++e) {
          const Edge& ed = g[u][e];
          if (ed.cap > 1e-15 && dist[u] + ed.cost < dist[ed.to] - 1e-9) {
            dist[ed.to] = dist[u] + ed.cost;
            pv[ed.to] = u;
            pe[ed.to] = e;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[dst] == inf) break;
    double push = inf;
    for (int v = dst; v != src; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
    if (push <= 1e-15) break;
    for (int v = dst; v != src; v = pv[v]) {
      Edge& ed = g[pv[v]][pe[v]];
      ed.cap -= push;
      g[v][ed.rev].cap += push;
    }
    flow += push;
    total += push * dist[dst];
  }
  return total;
}

inline std::vector<double> RandomSimplex(int n, Rng& rng) {
  std::vector<double> w(n);
  double t = 0.0;
  for (double& v : w) t += (v = rng.Exponential());
  for (double& v : w) v /= t;
  return w;
}

// Random MDP with Dirichlet rows and rewards uniform in [0, 1).
inline Mdp RandomMdp(int ns, int na, double gamma, Rng& rng) {
  std::vector<double> p, r;
  for (int i = 0; i < ns * na; ++i) {
    const auto row = RandomSimplex(ns, rng);
    p.insert(p.end(), row.begin(), row.end());
    r.push_back(rng.Uniform());
  }
  return Mdp(ns, na, gamma, 1.0, std::move(p), std::move(r));
}

// Bernoulli(mean) rewards on top of a tabular kernel.
class BernoulliRewards final : public FrozenModel {
 public:
  BernoulliRewards(int ns, int na, std::vector<double> p, std::vector<double> means)
      : ns_(ns), na_(na), p_(std::move(p)), means_(std::move(means)) {}
  void Transition(int s, int a, std::span<double> out) const override {
    for (int j = 0; j < ns_; ++j) out[j] = p_[(static_cast<std::size_t>(s) * na_ + a) * ns_ + j];
  }
  double RewardMean(int s, int a) const override { return means_[static_cast<std::size_t>(s) * na_ + a]; }
  double RewardSample(int s, int a, Rng& rng) const override {
    return rng.Bernoulli(RewardMean(s, a)) ? 1.0 : 0.0;
  }

 private:
  int ns_, na_;
  std::vector<double> p_, means_;
};

// Tabular model whose kernel mixes a fixed table with the population's state
// marginal: P(.|s,a,L) = (1 - lambda) P0(.|s,a) + lambda mu_L. Rewards are
// fixed. lambda = 0 gives a population-independent model.
class MixingModel final : public Model {
 public:
  MixingModel(int ns, int na, double gamma, std::vector<double> p0, std::vector<double> r, double lambda)
      : ns_(ns), na_(na), gamma_(gamma), p0_(std::move(p0)), r_(std::move(r)), lambda_(lambda),
        states_(FiniteSpace::Integers(ns)), actions_(FiniteSpace::Integers(na)) {}

  static MixingModel Random(int ns, int na, double gamma, double lambda, Rng& rng) {
    std::vector<double> p, r;
    for (int i = 0; i < ns * na; ++i) {
      const auto row = RandomSimplex(ns, rng);
      p.insert(p.end(), row.begin(), row.end());
      r.push_back(rng.Uniform());
    }
    return MixingModel(ns, na, gamma, std::move(p), std::move(r), lambda);
  }

  std::string name() const override { return "mixing"; }
  const FiniteSpace& state_space() const override { return states_; }
  const FiniteSpace& action_space() const override { return actions_; }
  double gamma() const override { return gamma_; }
  double r_max() const override { return 1.0; }
  double reward_shift() const override { return 0.0; }
  bool transition_depends_on_population() const override { return lambda_ > 0.0; }

  std::unique_ptr<FrozenModel> Freeze(const MeanField& L) const override {
    CheckPopulation(L);
    const StateDist mu = L.StateMarginal();
    std::vector<double> p(p0_);
    for (std::size_t pair = 0; pair < static_cast<std::size_t>(ns_) * na_; ++pair) {
      for (int j = 0; j < ns_; ++j) p[pair * ns_ + j] = (1.0 - lambda_) * p[pair * ns_ + j] + lambda_ * mu[j];
    }
    return std::make_unique<BernoulliRewards>(ns_, na_, std::move(p), r_);
  }

 private:
  int ns_, na_;
  double gamma_;
  std::vector<double> p0_, r_;
  double lambda_;
  FiniteSpace states_, actions_;
};

inline Mdp RandomBernoulliMdp(int ns, int na, double gamma, Rng& rng) {
  std::vector<double> p, r;
  for (int i = 0; i < ns * na; ++i) {
    const auto row = RandomSimplex(ns, rng);
    p.insert(p.end(), row.begin(), row.end());
    r.push_back(rng.Uniform());
  }
  auto sampler = std::make_shared<BernoulliRewards>(ns, na, p, r);
  return Mdp(ns, na, gamma, 1.0, std::move(p), std::move(r), std::move(sampler));
}

// The N = 1 pricing game as an explicit MDP: the lone firm's own production
// sets the price. Built by stepping the game from every (s, a).
inline Mdp SinglePlayerPricingMdp(const NPlayerPricing& game) {
  const int ns = game.num_states(), na = game.num_actions();
  std::vector<double> p(static_cast<std::size_t>(ns) * na * ns, 0.0), r(static_cast<std::size_t>(ns) * na);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      std::vector<int> st{s};
      const std::vector<int> act{a};
      std::vector<double> rew(1);
      game.StepInPlace(st, act, rew);
      p[(static_cast<std::size_t>(s) * na + a) * ns + st[0]] = 1.0;
      r[static_cast<std::size_t>(s) * na + a] = rew[0];
    }
  }
  return Mdp(ns, na, game.model().gamma(), game.model().r_max(), std::move(p), std::move(r));
}

// V* by plain Bellman iteration until the sup-change falls below tol.
inline std::vector<double> IterateOptimalValue(const Mdp& m, double tol = 1e-12) {
  const int ns = m.num_states(), na = m.num_actions();
  std::vector<double> v(ns, 0.0), next(ns);
  for (double change = 1.0; change > tol;) {
    change = 0.0;
    for (int s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < na; ++a) {
        double q = m.R(s, a);
        for (int s2 = 0; s2 < ns; ++s2) q += m.gamma() * m.P(s, a, s2) * v[s2];
        best = std::max(best, q);
      }
      next[s] = best;
      change = std::max(change, std::abs(best - v[s]));
    }
    v.swap(next);
  }
  return v;
}

// V^pi by direct linear solve, independent of the library's evaluator.
inline std::vector<double> LinearSolveValue(const Mdp& m, const Policy& pi) {
  const int ns = m.num_states(), na = m.num_actions();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(ns, ns);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      r(s) += pi(s, a) * m.R(s, a);
      for (int s2 = 0; s2 < ns; ++s2) A(s, s2) -= m.gamma() * pi(s, a) * m.P(s, a, s2);
    }
  }
  Eigen::VectorXd v = A.colPivHouseholderQr().solve(r);
  return {v.data(), v.data() + ns};
}

inline QTable QFromValue(const Mdp& m, const std::vector<double>& v) {
  QTable q(m.num_states(), m.num_actions());
  for (int s = 0; s < m.num_states(); ++s) {
    for (int a = 0; a < m.num_actions(); ++a) {
      double ev = 0.0;
      for (int s2 = 0; s2 < m.num_states(); ++s2) ev += m.P(s, a, s2) * v[s2];
      q(s, a) = m.R(s, a) + m.gamma() * ev;
    }
  }
  return q;
}

// Optimal values by enumerating every deterministic policy.
inline std::vector<double> EnumerateOptimalValue(const Mdp& m) {
  const int ns = m.num_states(), na = m.num_actions();
  std::vector<int> choice(ns, 0);
  std::vector<double> best(ns, -std::numeric_limits<double>::infinity());
  for (;;) {
    const auto v = LinearSolveValue(m, Policy::Deterministic(na, choice));
    for (int s = 0; s < ns; ++s) best[s] = std::max(best[s], v[s]);
    int i = 0;
    while (i < ns && ++choice[i] == na) choice[i++] = 0;
    if (i == ns) break;
  }
  return best;
}

}  // namespace gmfg::testing
