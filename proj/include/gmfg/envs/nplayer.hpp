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

// The N-player pricing game: the market price clears against the realized
// average production of all N firms.

#pragma once

#include <span>
#include <vector>

#include "gmfg/envs/pricing.hpp"

namespace gmfg {

struct NPlayerState {
  std::vector<int> inventories;
};

struct NPlayerStep {
  NPlayerState next;
  std::vector<double> rewards;  // shifted
  double price;
};

class NPlayerPricing {
 public:
  NPlayerPricing(PricingParams params, int num_players) : model_(params), n_(num_players) {
    if (n_ < 1) throw ConfigError("nplayer: N must be >= 1");
  }

  int num_players() const { return n_; }
  const PricingModel& model() const { return model_; }
  const PricingParams& params() const { return model_.params(); }
  int num_states() const { return model_.num_states(); }
  int num_actions() const { return model_.num_actions(); }

  // p = (d N / sum_i q_i)^(1/sigma), floored like the mean-field price.
  double Price(std::span<const int> actions) const {
    if (static_cast<int>(actions.size()) != n_) throw DimensionError("nplayer: action count != N");
    double total = 0.0;
    for (int a : actions) total += params().QOf(a);
    return PricingPrice(total / n_, params());
  }

  // In-place step: states are overwritten with next states. Returns the price.
  double StepInPlace(std::span<int> states, std::span<const int> actions, std::span<double> rewards) const {
    if (static_cast<int>(states.size()) != n_ || static_cast<int>(rewards.size()) != n_) {
      throw DimensionError("nplayer: state/reward count != N");
    }
    const double price = Price(actions);
    const PricingParams& p = params();
    const double shift = model_.reward_shift();
    for (int i = 0; i < n_; ++i) {
      const int q = p.QOf(actions[i]), h = p.HOf(actions[i]);
      rewards[i] = PricingRawReward(states[i], q, h, price, p) + shift;
      states[i] = PricingNextState(states[i], q, h, p);
    }
    return price;
  }

  NPlayerStep Step(const NPlayerState& state, std::span<const int> actions, Rng& /*rng*/) const {
    if (static_cast<int>(actions.size()) != n_) throw DimensionError("nplayer: action count != N");
    for (int s : state.inventories) {
      if (s < 0 || s >= num_states()) throw InvalidInput("nplayer: inventory outside the grid");
    }
    for (int a : actions) {
      if (a < 0 || a >= num_actions()) throw InvalidInput("nplayer: action outside the grid");
    }
    NPlayerStep out{state, std::vector<double>(n_), 0.0};
    out.price = StepInPlace(out.next.inventories, actions, out.rewards);
    return out;
  }

 private:
  PricingModel model_;
  int n_;
};

}  // namespace gmfg
