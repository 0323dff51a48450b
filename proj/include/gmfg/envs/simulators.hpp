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

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"
#include "gmfg/population.hpp"

namespace gmfg {

struct StrongStep {
  int next_state;
  double reward;
  MeanField next_population;
};

struct AgentStep {
  int next_state;
  double reward;
};

// G(s, pi, L): one agent transition plus the exact next population.
inline StrongStep StrongSimulate(const Model& model, int s, const Policy& pi, const MeanField& L, Rng& rng) {
  model.CheckPopulation(L);
  const Mdp mdp(model, L);
  mdp.CheckPolicy(pi);
  const int a = pi.Sample(s, rng);
  const int s2 = mdp.SampleNext(s, a, rng);
  const double r = mdp.SampleReward(s, a, rng);
  return {s2, r, Gamma2Exact(model, pi, L)};
}

// G_W bound to one empirical population L_N. Reusable across agents.
class WeakSimulator {
 public:
  WeakSimulator(const Model& model, const MeanField& L_N, int N) : mdp_(Checked(model, L_N, N)) {}

  AgentStep Step(int s, const Policy& pi, Rng& rng) const {
    const int a = pi.Sample(s, rng);
    const int s2 = mdp_.SampleNext(s, a, rng);
    return {s2, mdp_.SampleReward(s, a, rng)};
  }

  const Mdp& mdp() const { return mdp_; }

 private:
  static Mdp Checked(const Model& model, const MeanField& L_N, int N) {
    model.CheckPopulation(L_N);
    if (!IsEmpirical(L_N, N)) {
      throw InvalidInput("weak_simulate: population is not an empirical measure of " + std::to_string(N) +
                         " agents");
    }
    return Mdp(model, L_N);
  }

  Mdp mdp_;
};

inline AgentStep WeakSimulate(const Model& model, int s, const Policy& pi, const MeanField& L_N, int N,
                              Rng& rng) {
  return WeakSimulator(model, L_N, N).Step(s, pi, rng);
}

}  // namespace gmfg
