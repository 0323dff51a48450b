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

// Sample-based trust-region policy optimization on a frozen MDP, as
// stochastic mirror ascent over per-state action distributions.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"
#include "gmfg/rng.hpp"
#include "gmfg/solvers/exact.hpp"

namespace gmfg {

enum class Bregman { kEuclidean, kKl };

inline const char* ToString(Bregman b) { return b == Bregman::kKl ? "kl" : "euclidean"; }

inline Bregman ParseBregman(const std::string& s) {
  if (s == "kl") return Bregman::kKl;
  if (s == "euclidean") return Bregman::kEuclidean;
  throw ConfigError("unknown bregman divergence '" + s + "'");
}

struct TrpoConfig {
  int episodes = 200;
  int trajectories = 64;  // M0
  Bregman bregman = Bregman::kKl;
  double step_scale = 0.0;  // C in t_l; <= 0 means r_max
  double rollout_tol = 1e-2;
  std::vector<double> restart;  // nu; empty means uniform
  int eval_every = 10;

  void Validate(int num_states) const {
    if (episodes < 0) throw ConfigError("trpo: episodes must be >= 0");
    if (trajectories < 1) throw ConfigError("trpo: trajectories must be >= 1");
    if (!(rollout_tol > 0.0)) throw ConfigError("trpo: rollout_tol must be > 0");
    if (eval_every < 1) throw ConfigError("trpo: eval_every must be >= 1");
    if (!restart.empty()) {
      if (static_cast<int>(restart.size()) != num_states) throw ConfigError("trpo: restart size != |S|");
      for (double x : restart) {
        if (!(x > 0.0)) throw ConfigError("trpo: restart distribution must be strictly positive");
      }
      try {
        Distribution check(restart);
      } catch (const InvalidInput& e) {
        throw ConfigError(std::string("trpo: ") + e.what());
      }
    }
  }
};

// Truncation horizon H with gamma^H r_max / (1 - gamma) <= tol.
inline int RolloutHorizon(double gamma, double r_max, double tol) {
  if (r_max <= 0.0) return 1;
  const double h = std::log(tol * (1.0 - gamma) / r_max) / std::log(gamma);
  return std::max(1, static_cast<int>(std::ceil(h)));
}

// Exact sample from d_nu^pi = (1 - gamma) nu (I - gamma P^pi)^-1.
inline int OccupancySample(const Mdp& m, const Policy& pi, const Distribution& nu, Rng& rng) {
  int s = nu.Sample(rng);
  while (rng.Bernoulli(m.gamma())) s = m.SampleNext(s, pi.Sample(s, rng), rng);
  return s;
}

// Euclidean projection onto the probability simplex.
inline void ProjectSimplex(std::span<double> x) {
  std::vector<double> u(x.begin(), x.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(v - theta, 0.0);
  double total = 0.0;
  for (double v : x) total += v;
  for (double& v : x) v /= total;
}

struct TrpoResult {
  Policy best;
  Policy last;
  double best_value = -std::numeric_limits<double>::infinity();
  // (episode, V^{pi_l}(nu)) at every evaluation point
  std::vector<std::pair<int, double>> evaluations;
};

inline TrpoResult TrpoSolve(const Mdp& m, const TrpoConfig& cfg, Rng& rng) {
  const int ns = m.num_states(), na = m.num_actions();
  cfg.Validate(ns);
  const double g = m.gamma();
  const Distribution nu = cfg.restart.empty() ? Distribution::Uniform(ns) : Distribution(cfg.restart);
  const double big_c = cfg.step_scale > 0.0 ? cfg.step_scale : std::max(m.r_max(), 1e-12);
  const double cw1 = cfg.bregman == Bregman::kEuclidean ? std::sqrt(static_cast<double>(na)) : 1.0;
  const int horizon = RolloutHorizon(g, m.r_max(), cfg.rollout_tol);

  std::vector<double> table(static_cast<std::size_t>(ns) * na, 1.0 / na);
  TrpoResult out;
  auto evaluate = [&](int episode) {
    Policy pi(ns, na, table);
    const auto pv = EvaluatePolicy(m, pi);
    const double value = Expectation(nu.weights(), pv.v);
    out.evaluations.emplace_back(episode, value);
    if (value > out.best_value) {
      out.best_value = value;
      out.best = pi;
    }
    return pi;
  };

  std::vector<double> grad(static_cast<std::size_t>(ns) * na);
  std::vector<int> visits(ns);
  for (int l = 0; l < cfg.episodes; ++l) {
    const Policy pi = (l % cfg.eval_every == 0) ? evaluate(l) : Policy(ns, na, table);
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(visits.begin(), visits.end(), 0);
    for (int k = 0; k < cfg.trajectories; ++k) {
      const int s0 = OccupancySample(m, pi, nu, rng);
      const int a0 = static_cast<int>(rng.Below(na));
      double qhat = 0.0, disc = 1.0;
      int s = s0, a = a0;
      for (int t = 0; t < horizon; ++t) {
        qhat += disc * m.SampleReward(s, a, rng);
        disc *= g;
        s = m.SampleNext(s, a, rng);
        a = pi.Sample(s, rng);
      }
      grad[static_cast<std::size_t>(s0) * na + a0] += qhat;
      ++visits[s0];
    }
    const double step = (1.0 - g) / (cw1 * big_c * std::sqrt(static_cast<double>(l) + 1.0));
    for (int s = 0; s < ns; ++s) {
      if (visits[s] == 0) continue;
      std::span<double> row(table.data() + static_cast<std::size_t>(s) * na, na);
      const double scale = step * na / visits[s];
      if (cfg.bregman == Bregman::kKl) {
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> logits(na);
        for (int a = 0; a < na; ++a) {
          logits[a] = std::log(row[a]) + scale * grad[static_cast<std::size_t>(s) * na + a];
          mx = std::max(mx, logits[a]);
        }
        double total = 0.0;
        for (int a = 0; a < na; ++a) total += (row[a] = std::exp(logits[a] - mx));
        for (int a = 0; a < na; ++a) row[a] = std::max(row[a] / total, std::numeric_limits<double>::min());
        total = 0.0;
        for (double v : row) total += v;
        for (double& v : row) v /= total;
      } else {
        for (int a = 0; a < na; ++a) row[a] += scale * grad[static_cast<std::size_t>(s) * na + a];
        ProjectSimplex(row);
      }
    }
  }
  out.last = evaluate(cfg.episodes);
  return out;
}

}  // namespace gmfg
