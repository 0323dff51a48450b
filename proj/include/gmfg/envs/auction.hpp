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

// Repeated second-price auction with budgets. The representative bidder
// meets M-1 opponents whose bids are drawn from the population's action
// marginal; the highest bid wins (ties go to the representative bidder) and
// pays the best competing bid X.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"

namespace gmfg {

struct AuctionParams {
  double gamma = 0.2;
  int s_max = 10;
  int a_max = 5;
  int M = 3;
  double rho = 0.5;
  // v is uniform on {0..v_max}; negative means v_max = a_max.
  int v_max = -1;

  int ResolvedVMax() const { return v_max < 0 ? a_max : v_max; }

  void Validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("auction: gamma must lie in (0, 1)");
    if (s_max < 1 || a_max < 1) throw ConfigError("auction: s_max and a_max must be >= 1");
    if (M < 2) throw ConfigError("auction: M must be >= 2");
    if (!(rho >= 0.0)) throw ConfigError("auction: rho must be >= 0");
  }
};

inline double AuctionRawReward(bool win, int payment, double v, int s, double rho) {
  if (!win) return 0.0;
  return (v - payment) - (1.0 + rho) * (s < payment ? payment - s : 0);
}

inline int AuctionNextState(bool win, int payment, int s) {
  if (!win) return s;
  return payment <= s ? s - payment : 0;
}

class AuctionModel final : public Model {
 public:
  explicit AuctionModel(AuctionParams params = {}) : params_(params) {
    params_.Validate();
    states_ = FiniteSpace::Integers(params_.s_max + 1);
    actions_ = FiniteSpace::Integers(params_.a_max + 1);
    shift_ = params_.a_max * (2.0 + params_.rho);
    r_max_ = params_.ResolvedVMax() + shift_;
  }

  const AuctionParams& params() const { return params_; }

  std::string name() const override { return "auction"; }
  const FiniteSpace& state_space() const override { return states_; }
  const FiniteSpace& action_space() const override { return actions_; }
  double gamma() const override { return params_.gamma; }
  double r_max() const override { return r_max_; }
  double reward_shift() const override { return shift_; }
  bool transition_depends_on_population() const override { return true; }

  std::unique_ptr<FrozenModel> Freeze(const MeanField& L) const override {
    CheckPopulation(L);
    return std::make_unique<Frozen>(this, L.ActionMarginal());
  }

  std::vector<std::pair<std::string, double>> Summaries(const MeanField& L) const override {
    const StateDist mu = L.StateMarginal();
    const ActionDist alpha = L.ActionMarginal();
    double budget = 0.0, bid = 0.0;
    for (int s = 0; s < mu.size(); ++s) budget += mu[s] * s;
    for (int a = 0; a < alpha.size(); ++a) bid += alpha[a] * a;
    return {{"mean_budget", budget}, {"mean_bid", bid}};
  }

 private:
  class Frozen final : public FrozenModel {
   public:
    Frozen(const AuctionModel* m, ActionDist alpha) : m_(m), alpha_(std::move(alpha)) {
      const int n = alpha_.size();
      g_.assign(n, 0.0);
      double f = 0.0;
      for (int x = 0; x < n; ++x) {
        f = std::min(1.0, f + alpha_[x]);
        g_[x] = std::pow(f, m_->params_.M - 1);
      }
      g_.back() = 1.0;
    }

    // P(win and X = x) for x <= a.
    double WinAt(int x) const { return g_[x] - (x > 0 ? g_[x - 1] : 0.0); }

    void Transition(int s, int a, std::span<double> out) const override {
      std::fill(out.begin(), out.end(), 0.0);
      out[s] += 1.0 - g_[a];
      for (int x = 0; x <= a; ++x) out[AuctionNextState(true, x, s)] += WinAt(x);
    }

    double RewardMean(int s, int a) const override {
      const double ev = m_->params_.ResolvedVMax() / 2.0;
      double r = 0.0;
      for (int x = 0; x <= a; ++x) r += WinAt(x) * AuctionRawReward(true, x, ev, s, m_->params_.rho);
      return r + m_->shift_;
    }

    double RewardSample(int s, int a, Rng& rng) const override {
      int payment = 0;
      for (int j = 1; j < m_->params_.M; ++j) payment = std::max(payment, alpha_.Sample(rng));
      const bool win = payment <= a;
      const double v = static_cast<double>(rng.Below(m_->params_.ResolvedVMax() + 1));
      return AuctionRawReward(win, payment, v, s, m_->params_.rho) + m_->shift_;
    }

   private:
    const AuctionModel* m_;
    ActionDist alpha_;
    std::vector<double> g_;  // F_alpha(x)^(M-1)
  };

  AuctionParams params_;
  FiniteSpace states_;
  FiniteSpace actions_;
  double shift_ = 0.0;
  double r_max_ = 0.0;
};

}  // namespace gmfg
