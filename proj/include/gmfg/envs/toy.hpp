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

// Two-state, two-action toy game. Action 0 (left) moves to state 0, action 1
// (right) moves to state 1. The reward penalizes the W2 distance of the
// population state distribution and of the local action distribution from
// Bernoulli(p).

#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"

namespace gmfg {

struct ToyParams {
  double p = 0.5;
  double gamma = 0.2;

  void Validate() const {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("toy: p must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("toy: gamma must lie in (0, 1)");
  }
};

struct ToyStep {
  int next_state;
  double raw_reward;
};

class ToyModel final : public Model {
 public:
  static constexpr double kShift = 2.0;

  explicit ToyModel(ToyParams params = {})
      : params_(params), space_(FiniteSpace::Integers(2)) {
    params_.Validate();
  }

  const ToyParams& params() const { return params_; }

  std::string name() const override { return "toy"; }
  const FiniteSpace& state_space() const override { return space_; }
  const FiniteSpace& action_space() const override { return space_; }
  double gamma() const override { return params_.gamma; }
  double r_max() const override { return kShift; }
  double reward_shift() const override { return kShift; }
  bool transition_depends_on_population() const override { return false; }

  // Raw per-state rewards at L.
  std::array<double, 2> RawRewards(const MeanField& L) const {
    CheckPopulation(L);
    const std::vector<double> b{1.0 - params_.p, params_.p};
    const StateDist mu = L.StateMarginal();
    const double pop = W2TwoPoint(mu.weights(), b);
    std::array<double, 2> out{};
    for (int s = 0; s < 2; ++s) {
      std::vector<double> beta{0.5, 0.5};
      if (mu[s] > 0.0) beta = {L(s, 0) / mu[s], L(s, 1) / mu[s]};
      out[s] = -pop - W2TwoPoint(beta, b);
    }
    return out;
  }

  ToyStep Step(int s, int a, const MeanField& L) const {
    CheckPair(s, a);
    return {a, RawRewards(L)[s]};
  }

  std::unique_ptr<FrozenModel> Freeze(const MeanField& L) const override {
    return std::make_unique<Frozen>(RawRewards(L));
  }

  std::vector<std::pair<std::string, double>> Summaries(const MeanField& L) const override {
    return {{"mu1", L.StateMarginal()[1]}, {"alpha1", L.ActionMarginal()[1]}};
  }

  // mu* = pi*(s) = (1 - p, p).
  MeanField Equilibrium() const {
    const double q = params_.p;
    return MeanField(2, 2, {(1 - q) * (1 - q), (1 - q) * q, q * (1 - q), q * q});
  }

 private:
  class Frozen final : public FrozenModel {
   public:
    explicit Frozen(std::array<double, 2> raw) : raw_(raw) {}
    void Transition(int /*s*/, int a, std::span<double> out) const override {
      out[0] = a == 0 ? 1.0 : 0.0;
      out[1] = a == 1 ? 1.0 : 0.0;
    }
    double RewardMean(int s, int /*a*/) const override { return raw_[s] + kShift; }
    double RewardSample(int s, int a, Rng& /*rng*/) const override { return RewardMean(s, a); }
    bool deterministic_rewards() const override { return true; }

   private:
    std::array<double, 2> raw_;
  };

  ToyParams params_;
  FiniteSpace space_;
};

}  // namespace gmfg
