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

// Equilibrium pricing with inventory. A firm holding s units of raw material
// produces q and replenishes h; the market price clears demand d p^-sigma
// against the population's mean production.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"

namespace gmfg {

struct PricingParams {
  double gamma = 0.2;
  double d = 50.0;
  double sigma = 2.0;
  double c0 = 0.5;
  double c1 = 0.1;
  double c2 = 0.5;
  double c3 = 0.2;
  double c4 = 0.2;
  // States {0..s_max}; actions (q, h) with q in [q_min, q_max], h in [h_min, h_max].
  int s_max = 9;
  int q_min = 1;
  int q_max = 10;
  int h_min = 0;
  int h_max = 9;
  double q_floor = 0.01;

  // |S| = num_states, q in {1..num_q}, h in {0..num_h-1}.
  static PricingParams WithSizes(int num_states, int num_q, int num_h) {
    PricingParams p;
    p.s_max = num_states - 1;
    p.q_min = 1;
    p.q_max = num_q;
    p.h_min = 0;
    p.h_max = num_h - 1;
    return p;
  }

  int num_states() const { return s_max + 1; }
  int num_q() const { return q_max - q_min + 1; }
  int num_h() const { return h_max - h_min + 1; }
  int num_actions() const { return num_q() * num_h(); }

  int ActionIndex(int q, int h) const {
    if (q < q_min || q > q_max || h < h_min || h > h_max) {
      throw InvalidInput("pricing: action (q=" + std::to_string(q) + ", h=" + std::to_string(h) +
                         ") outside the grid");
    }
    return (q - q_min) * num_h() + (h - h_min);
  }
  int QOf(int a) const { return q_min + a / num_h(); }
  int HOf(int a) const { return h_min + a % num_h(); }

  void Validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("pricing: gamma must lie in (0, 1)");
    if (!(d > 0.0)) throw ConfigError("pricing: d must be > 0");
    if (!(sigma > 0.0)) throw ConfigError("pricing: sigma must be > 0");
    for (double c : {c0, c1, c2, c3, c4}) {
      if (!(c >= 0.0)) throw ConfigError("pricing: costs must be >= 0");
    }
    if (s_max < 0) throw ConfigError("pricing: s_max must be >= 0");
    if (q_min < 0 || q_max < q_min) throw ConfigError("pricing: need 0 <= q_min <= q_max");
    if (h_min < 0 || h_max < h_min) throw ConfigError("pricing: need 0 <= h_min <= h_max");
    if (!(q_floor > 0.0)) throw ConfigError("pricing: q_floor must be > 0");
  }
};

// p = (d / E[q])^(1/sigma), with E[q] floored at q_floor.
inline double PricingPrice(double mean_q, const PricingParams& params) {
  return std::pow(params.d / std::max(mean_q, params.q_floor), 1.0 / params.sigma);
}

inline double PricingPrice(const ActionDist& alpha, const PricingParams& params) {
  if (alpha.size() != params.num_actions()) throw DimensionError("pricing_price: action count");
  double mean_q = 0.0;
  for (int a = 0; a < alpha.size(); ++a) mean_q += alpha[a] * params.QOf(a);
  return PricingPrice(mean_q, params);
}

inline double PricingRawReward(int s, int q, int h, double price, const PricingParams& m) {
  return (price - m.c0) * q - m.c1 * q * q - m.c2 * h - (m.c2 + m.c3) * std::max(q - s, 0) - m.c4 * s;
}

inline int PricingNextState(int s, int q, int h, const PricingParams& m) {
  return std::min(s - std::min(q, s) + h, m.s_max);
}

struct PricingStep {
  int next_state;
  double raw_reward;
};

inline PricingStep PricingStepAt(int s, int q, int h, double price, const PricingParams& m) {
  if (s < 0 || s > m.s_max) throw InvalidInput("pricing: state outside the grid");
  m.ActionIndex(q, h);
  return {PricingNextState(s, q, h, m), PricingRawReward(s, q, h, price, m)};
}

class PricingModel final : public Model {
 public:
  explicit PricingModel(PricingParams params = {}) : params_(params) {
    params_.Validate();
    states_ = FiniteSpace::Integers(params_.num_states());
    std::vector<std::vector<double>> pts;
    for (int a = 0; a < params_.num_actions(); ++a) {
      pts.push_back({static_cast<double>(params_.QOf(a)), static_cast<double>(params_.HOf(a))});
    }
    actions_ = FiniteSpace(std::move(pts));

    const double p_lo = PricingPrice(static_cast<double>(params_.q_max), params_);
    const double p_hi = PricingPrice(static_cast<double>(params_.q_min), params_);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int s = 0; s <= params_.s_max; ++s) {
      for (int a = 0; a < params_.num_actions(); ++a) {
        const int q = params_.QOf(a), h = params_.HOf(a);
        lo = std::min(lo, PricingRawReward(s, q, h, p_lo, params_));
        hi = std::max(hi, PricingRawReward(s, q, h, p_hi, params_));
      }
    }
    shift_ = -lo;
    r_max_ = hi - lo;
  }

  const PricingParams& params() const { return params_; }

  std::string name() const override { return "pricing"; }
  const FiniteSpace& state_space() const override { return states_; }
  const FiniteSpace& action_space() const override { return actions_; }
  double gamma() const override { return params_.gamma; }
  double r_max() const override { return r_max_; }
  double reward_shift() const override { return shift_; }
  bool transition_depends_on_population() const override { return false; }

  double Price(const MeanField& L) const {
    CheckPopulation(L);
    return PricingPrice(L.ActionMarginal(), params_);
  }

  // (s', raw reward) for action index a at population L.
  PricingStep Step(int s, int a, const MeanField& L) const {
    CheckPair(s, a);
    return PricingStepAt(s, params_.QOf(a), params_.HOf(a), Price(L), params_);
  }

  std::unique_ptr<FrozenModel> Freeze(const MeanField& L) const override {
    return std::make_unique<Frozen>(this, Price(L));
  }
  std::unique_ptr<FrozenModel> FreezeAtPrice(double price) const {
    return std::make_unique<Frozen>(this, price);
  }

  std::vector<std::pair<std::string, double>> Summaries(const MeanField& L) const override {
    const StateDist mu = L.StateMarginal();
    const ActionDist alpha = L.ActionMarginal();
    double inv = 0.0, q = 0.0, h = 0.0;
    for (int s = 0; s < mu.size(); ++s) inv += mu[s] * s;
    for (int a = 0; a < alpha.size(); ++a) {
      q += alpha[a] * params_.QOf(a);
      h += alpha[a] * params_.HOf(a);
    }
    return {{"price", PricingPrice(q, params_)},
            {"mean_inventory", inv},
            {"mean_production", q},
            {"mean_replenishment", h}};
  }

  // Distribution of production quantity q over {q_min..q_max}.
  std::vector<double> ProductionDistribution(const MeanField& L) const {
    const ActionDist alpha = L.ActionMarginal();
    std::vector<double> out(params_.num_q(), 0.0);
    for (int a = 0; a < alpha.size(); ++a) out[params_.QOf(a) - params_.q_min] += alpha[a];
    return out;
  }

 private:
  class Frozen final : public FrozenModel {
   public:
    Frozen(const PricingModel* m, double price) : m_(m), price_(price) {}
    void Transition(int s, int a, std::span<double> out) const override {
      std::fill(out.begin(), out.end(), 0.0);
      const auto& p = m_->params_;
      out[PricingNextState(s, p.QOf(a), p.HOf(a), p)] = 1.0;
    }
    double RewardMean(int s, int a) const override {
      const auto& p = m_->params_;
      return PricingRawReward(s, p.QOf(a), p.HOf(a), price_, p) + m_->shift_;
    }
    double RewardSample(int s, int a, Rng& /*rng*/) const override { return RewardMean(s, a); }
    bool deterministic_rewards() const override { return true; }

   private:
    const PricingModel* m_;
    double price_;
  };

  PricingParams params_;
  FiniteSpace states_;
  FiniteSpace actions_;
  double shift_ = 0.0;
  double r_max_ = 0.0;
};

}  // namespace gmfg
