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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "gmfg/analysis.hpp"
#include "gmfg/envs/auction.hpp"
#include "gmfg/envs/nplayer.hpp"
#include "gmfg/envs/pricing.hpp"
#include "gmfg/envs/toy.hpp"
#include "gmfg/loops.hpp"
#include "gmfg/metrics.hpp"
#include "oracles.hpp"

namespace gmfg {
namespace {

using testing::IterateOptimalValue;
using testing::LinearSolveValue;
using testing::MixingModel;
using testing::SinglePlayerPricingMdp;

// The same model with action labels relabelled: new action j is old perm[j].
class PermutedActions final : public Model {
 public:
  PermutedActions(const Model& base, std::vector<int> perm) : base_(base), perm_(std::move(perm)) {
    std::vector<std::vector<double>> pts;
    for (int j : perm_) pts.push_back(base_.action_space().coords(j));
    actions_ = FiniteSpace(std::move(pts));
  }

  std::string name() const override { return "permuted " + base_.name(); }
  const FiniteSpace& state_space() const override { return base_.state_space(); }
  const FiniteSpace& action_space() const override { return actions_; }
  double gamma() const override { return base_.gamma(); }
  double r_max() const override { return base_.r_max(); }
  double reward_shift() const override { return base_.reward_shift(); }
  bool transition_depends_on_population() const override { return base_.transition_depends_on_population(); }

  std::unique_ptr<FrozenModel> Freeze(const MeanField& L) const override {
    return std::make_unique<Frozen>(base_.Freeze(ToBase(L)), perm_);
  }

  MeanField ToBase(const MeanField& L) const {
    const int ns = L.num_states(), na = L.num_actions();
    std::vector<double> w(static_cast<std::size_t>(ns) * na);
    for (int s = 0; s < ns; ++s) {
      for (int j = 0; j < na; ++j) w[static_cast<std::size_t>(s) * na + perm_[j]] = L(s, j);
    }
    return MeanField(ns, na, std::move(w));
  }

  // pi expressed in the permuted labels.
  Policy FromBase(const Policy& pi) const {
    const int ns = pi.num_states(), na = pi.num_actions();
    std::vector<double> w(static_cast<std::size_t>(ns) * na);
    for (int s = 0; s < ns; ++s) {
      for (int j = 0; j < na; ++j) w[static_cast<std::size_t>(s) * na + j] = pi(s, perm_[j]);
    }
    return Policy(ns, na, std::move(w));
  }

 private:
  class Frozen final : public FrozenModel {
   public:
    Frozen(std::unique_ptr<FrozenModel> base, const std::vector<int>& perm) : base_(std::move(base)), perm_(perm) {}
    void Transition(int s, int a, std::span<double> out) const override { base_->Transition(s, perm_[a], out); }
    double RewardMean(int s, int a) const override { return base_->RewardMean(s, perm_[a]); }
    double RewardSample(int s, int a, Rng& rng) const override { return base_->RewardSample(s, perm_[a], rng); }
    bool deterministic_rewards() const override { return base_->deterministic_rewards(); }

   private:
    std::unique_ptr<FrozenModel> base_;
    std::vector<int> perm_;
  };

  const Model& base_;
  std::vector<int> perm_;
  FiniteSpace actions_;
};

// ---------------------------------------------------------------------------
// Mean-field exploitability

TEST(ExploitabilityMfTest, NonNegativeOnRandomPolicies) {
  const PricingModel m;
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> w;
    for (int s = 0; s < m.num_states(); ++s) {
      const auto row = testing::RandomSimplex(m.num_actions(), rng);
      w.insert(w.end(), row.begin(), row.end());
    }
    EXPECT_GE(ExploitabilityMf(m, Policy(m.num_states(), m.num_actions(), w)), 0.0);
  }
}

TEST(ExploitabilityMfTest, ToyEquilibriumPolicyHasNoGap) {
  const ToyModel m;
  const MeanField L = m.Equilibrium();
  EXPECT_NEAR(ExploitabilityMf(m, Gamma1Exact(m, L)), 0.0, 1e-6);
  const StateDist mu = L.StateMarginal();
  std::vector<double> w;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) w.push_back(L(s, a) / mu[s]);
  }
  EXPECT_NEAR(ExploitabilityMf(m, Policy(2, 2, w)), 0.0, 1e-6);
}

TEST(ExploitabilityMfTest, InvariantUnderActionRelabelling) {
  const PricingModel base(PricingParams::WithSizes(4, 3, 2));
  std::vector<int> perm(base.num_actions());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  const PermutedActions permuted(base, perm);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> w;
    for (int s = 0; s < base.num_states(); ++s) {
      const auto row = testing::RandomSimplex(base.num_actions(), rng);
      w.insert(w.end(), row.begin(), row.end());
    }
    const Policy pi(base.num_states(), base.num_actions(), w);
    EXPECT_NEAR(ExploitabilityMf(base, pi), ExploitabilityMf(permuted, permuted.FromBase(pi)), 1e-10);
  }
}

TEST(ExploitabilityMfTest, UniformPolicyWorseThanLearnedPolicy) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 10;
  cfg.track_exploitability = false;
  const RunRecord run = GmfV(m, cfg, Rng(2));
  const double learned = ExploitabilityMf(m, run.final_policy());
  const double uniform = ExploitabilityMf(m, Policy::Uniform(m.num_states(), m.num_actions()));
  EXPECT_GT(uniform, learned);
  EXPECT_GT(uniform, 0.0);
}

TEST(ExploitabilityMfTest, LearnedBestResponseNeverBeatsExact) {
  const PricingModel m(PricingParams::WithSizes(4, 3, 2));
  const Policy pi = Policy::Uniform(m.num_states(), m.num_actions());
  MetricConfig exact, learned;
  learned.br_method = BestResponseMethod::kLearned;
  const double e = ExploitabilityMf(m, pi, exact);
  const double l = ExploitabilityMf(m, pi, learned);
  EXPECT_LE(l, e * (1.0 + 1e-9));
  EXPECT_NEAR(l, e, 0.05 * e);
}

TEST(MetricConfigTest, Validation) {
  MetricConfig cfg;
  cfg.eps0 = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.threads = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.mc_profiles = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  EXPECT_EQ(ParseBestResponseMethod("learned"), BestResponseMethod::kLearned);
  EXPECT_THROW(ParseBestResponseMethod("oracle"), ConfigError);
}

// ---------------------------------------------------------------------------
// N-player exploitability

TEST(ExploitabilityNTest, RolloutHorizon) {
  for (double gamma : {0.1, 0.2, 0.5, 0.9}) {
    const double r_max = 57.875, v_max = r_max / (1.0 - gamma), tol = 1e-3;
    const int h = RolloutHorizon(gamma, r_max, tol);
    EXPECT_LE(std::pow(gamma, h) * v_max, tol);
    EXPECT_GT(std::pow(gamma, h - 1) * v_max, tol);
  }
}

// One firm: C is the normalized single-agent suboptimality averaged over
// uniformly drawn starting inventories.
TEST(ExploitabilityNTest, SingleFirmMatchesExactSuboptimality) {
  const NPlayerPricing game(PricingParams::WithSizes(3, 2, 2), 1);
  const Mdp m = SinglePlayerPricingMdp(game);
  const std::vector<double> v_star = IterateOptimalValue(m);
  const Policy pi(3, 4, {0.7, 0.1, 0.1, 0.1, 0.25, 0.25, 0.25, 0.25, 0.1, 0.1, 0.1, 0.7});
  const std::vector<double> v_pi = LinearSolveValue(m, pi);
  double exact = 0.0;
  for (int s = 0; s < 3; ++s) exact += (v_star[s] - v_pi[s]) / (std::abs(v_star[s]) + 0.1) / 3.0;
  ASSERT_GT(exact, 0.01);

  MetricConfig cfg;
  cfg.mc_profiles = 300;
  cfg.rollouts = 200;
  cfg.br_steps = 50000;
  const NExploitability est = ExploitabilityN(game, NPlayerPolicyProfile::Symmetric(1, pi), cfg, Rng(4));
  EXPECT_EQ(est.players, 1);
  // Truncation bias is below rollout_tol / (v* + eps0); the rest is sampling noise.
  EXPECT_NEAR(est.value, exact, 4.0 * est.std_error + 1e-3);
}

TEST(ExploitabilityNTest, EnumeratedEquilibriumHasNoGap) {
  const PricingParams params = PricingParams::WithSizes(2, 2, 2);
  const NPlayerPricing game(params, 2);
  const int ns = game.num_states(), na = game.num_actions();
  const double gamma = game.model().gamma();

  // Deterministic own-inventory policies, encoded as na^ns integers.
  auto decode = [&](int code) {
    std::vector<int> act(ns);
    for (int s = 0; s < ns; ++s, code /= na) act[s] = code % na;
    return act;
  };
  const int n_pol = static_cast<int>(std::pow(na, ns));

  // V of player 0 on joint states (s0, s1) when player 1 plays `other` and
  // player 0 plays `own` (own < 0: optimal over joint-state policies).
  auto joint_value = [&](const std::vector<int>& own, const std::vector<int>& other) {
    std::vector<double> v(ns * ns, 0.0), next(ns * ns);
    for (int it = 0; it < 200; ++it) {
      for (int x = 0; x < ns * ns; ++x) {
        const int s0 = x / ns, s1 = x % ns;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < na; ++a) {
          if (!own.empty() && a != own[s0]) continue;
          std::vector<int> st{s0, s1};
          std::vector<double> r(2);
          game.StepInPlace(st, std::vector<int>{a, other[s1]}, r);
          best = std::max(best, r[0] + gamma * v[st[0] * ns + st[1]]);
        }
        next[x] = best;
      }
      v.swap(next);
    }
    return v;
  };

  int found = -1;
  for (int c0 = 0; c0 < n_pol && found < 0; ++c0) {
    for (int c1 = 0; c1 < n_pol && found < 0; ++c1) {
      // The game is symmetric, so player 1's check swaps the roles.
      const auto p0 = decode(c0), p1 = decode(c1);
      const auto own0 = joint_value(p0, p1), best0 = joint_value({}, p1);
      const auto own1 = joint_value(p1, p0), best1 = joint_value({}, p0);
      bool ok = true;
      for (int x = 0; x < ns * ns; ++x) {
        ok = ok && own0[x] >= best0[x] - 1e-9 && own1[x] >= best1[x] - 1e-9;
      }
      if (ok) found = c0 * n_pol + c1;
    }
  }
  ASSERT_GE(found, 0) << "no pure equilibrium in the test game";

  const std::vector<int> a0 = decode(found / n_pol), a1 = decode(found % n_pol);
  const NPlayerPolicyProfile prof(1, params.q_min, params.q_max,
                                  {{Policy::Deterministic(na, a0)}, {Policy::Deterministic(na, a1)}});
  MetricConfig cfg;
  cfg.mc_profiles = 50;
  cfg.rollouts = 5;
  cfg.br_steps = 20000;
  const NExploitability est = ExploitabilityN(game, prof, cfg, Rng(6));
  EXPECT_EQ(est.players, 2);
  EXPECT_NEAR(est.value, 0.0, 1e-9);
}

TEST(ExploitabilityNTest, StandardErrorShrinksWithProfiles) {
  const NPlayerPricing game(PricingParams::WithSizes(5, 3, 2), 4);
  const auto prof = NPlayerPolicyProfile::Symmetric(4, Policy::Uniform(5, 6));
  double ratio = 0.0;
  const int seeds = 5;
  for (int seed = 0; seed < seeds; ++seed) {
    MetricConfig cfg;
    cfg.rollouts = 4;
    cfg.br_steps = 20000;
    cfg.mc_profiles = 200;
    const double se1 = ExploitabilityN(game, prof, cfg, Rng(100 + seed)).std_error;
    cfg.mc_profiles = 400;
    const double se2 = ExploitabilityN(game, prof, cfg, Rng(100 + seed)).std_error;
    ratio += se2 / se1 / seeds;
  }
  EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.08);
}

TEST(ExploitabilityNTest, TinyBudgetFlagsWideInterval) {
  const NPlayerPricing game(PricingParams::WithSizes(3, 2, 2), 2);
  const auto prof = NPlayerPolicyProfile::Symmetric(2, Policy::Uniform(3, 4));
  MetricConfig cfg;
  cfg.mc_profiles = 1;
  cfg.rollouts = 1;
  cfg.br_steps = 100;
  const NExploitability est = ExploitabilityN(game, prof, cfg, Rng(1));
  EXPECT_TRUE(est.wide_ci);
  EXPECT_GE(est.value, 0.0);
}

TEST(ExploitabilityNTest, PlayerSubsetAndShapeChecks) {
  const NPlayerPricing game(PricingParams::WithSizes(3, 2, 2), 5);
  const auto prof = NPlayerPolicyProfile::Symmetric(5, Policy::Uniform(3, 4));
  MetricConfig cfg;
  cfg.mc_profiles = 10;
  cfg.rollouts = 2;
  cfg.br_steps = 1000;
  cfg.br_players = 2;
  EXPECT_EQ(ExploitabilityN(game, prof, cfg, Rng(1)).players, 2);
  EXPECT_THROW(ExploitabilityN(game, NPlayerPolicyProfile::Symmetric(4, Policy::Uniform(3, 4)), cfg, Rng(1)),
               DimensionError);
}

TEST(ExploitabilityNTest, ThreadCountDoesNotChangeTheEstimate) {
  const NPlayerPricing game(PricingParams::WithSizes(3, 2, 2), 3);
  BaselineConfig bc;
  bc.rounds = 2;
  bc.steps_per_round = 500;
  const auto prof = MfqTrain(game, bc, Rng(3));
  MetricConfig cfg;
  cfg.mc_profiles = 20;
  cfg.rollouts = 3;
  cfg.br_steps = 2000;
  const NExploitability one = ExploitabilityN(game, prof, cfg, Rng(5));
  cfg.threads = 3;
  const NExploitability three = ExploitabilityN(game, prof, cfg, Rng(5));
  EXPECT_EQ(one.value, three.value);
  EXPECT_EQ(one.std_error, three.std_error);
}

// ---------------------------------------------------------------------------
// Contraction report

TEST(ContractionTest, SwappingPairsKeepsRatios) {
  const PricingModel m(PricingParams::WithSizes(4, 3, 2));
  Rng rng(2);
  std::vector<std::pair<MeanField, MeanField>> ab, ba;
  for (int j = 0; j < 30; ++j) {
    MeanField x = MeanField::RandomUniform(4, 6, rng), y = MeanField::RandomUniform(4, 6, rng);
    ab.emplace_back(x, y);
    ba.emplace_back(y, x);
  }
  const auto r1 = ContractionFromPairs(m, ab), r2 = ContractionFromPairs(m, ba);
  ASSERT_EQ(r1.ratios.size(), r2.ratios.size());
  for (std::size_t j = 0; j < r1.ratios.size(); ++j) EXPECT_EQ(r1.ratios[j], r2.ratios[j]);
}

TEST(ContractionTest, IdenticalPairsAreExcluded) {
  const PricingModel m(PricingParams::WithSizes(3, 2, 2));
  Rng rng(1);
  const MeanField x = MeanField::RandomUniform(3, 4, rng), y = MeanField::RandomUniform(3, 4, rng);
  const auto rep = ContractionFromPairs(m, {{x, x}, {x, y}});
  EXPECT_EQ(rep.excluded, 1);
  EXPECT_EQ(rep.ratios.size(), 1u);
}

TEST(ContractionTest, ConstantMapGivesZeroRatios) {
  // Every row of the kernel is nu and rewards ignore L, so Gamma(L) = nu x pi.
  const int ns = 3, na = 2;
  const std::vector<double> nu{0.2, 0.5, 0.3};
  std::vector<double> p;
  for (int i = 0; i < ns * na; ++i) p.insert(p.end(), nu.begin(), nu.end());
  const MixingModel m(ns, na, 0.5, p, {0.1, 0.9, 0.4, 0.3, 0.8, 0.2}, 0.0);
  const auto rep = Contraction(m, 50, Rng(3));
  EXPECT_EQ(rep.ratios.size(), 50u);
  EXPECT_LT(rep.max, 1e-12);
  EXPECT_LT(rep.mean, 1e-12);
}

TEST(ContractionTest, SummaryIsConsistent) {
  const PricingModel m(PricingParams::WithSizes(4, 3, 2));
  const auto rep = Contraction(m, 40, Rng(7));
  ASSERT_EQ(rep.ratios.size(), 40u);
  double sum = 0.0;
  for (double r : rep.ratios) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, rep.max);
    sum += r;
  }
  EXPECT_NEAR(rep.mean, sum / 40.0, 1e-12);
  EXPECT_EQ(std::accumulate(rep.histogram.begin(), rep.histogram.end(), 0), 40);
  EXPECT_EQ(static_cast<double>(rep.histogram.size()), std::floor(rep.max / rep.bin_width) + 1);
}

TEST(ContractionTest, Deterministic) {
  const PricingModel m(PricingParams::WithSizes(3, 2, 2));
  EXPECT_EQ(Contraction(m, 10, Rng(4)).ratios, Contraction(m, 10, Rng(4)).ratios);
  EXPECT_EQ(Contraction(m, 10, Rng(4), 1).ratios, Contraction(m, 10, Rng(4), 2).ratios);
}

// ---------------------------------------------------------------------------
// Kernel bounds

TEST(AssumptionBoundsTest, PricingKernelIgnoresThePopulation) {
  const PricingModel m;
  const auto b = ComputeAssumptionBounds(m, 20, Rng(1));
  EXPECT_EQ(b.c1, 1.0);
  EXPECT_EQ(b.c2, 0.0);
  EXPECT_EQ(b.d3, 0.0);
  const auto& S = m.state_space();
  const auto& A = m.action_space();
  EXPECT_DOUBLE_EQ(b.d2, 2.0 * S.diam() * A.diam() * m.num_states() * b.c1 / A.d_min());
}

TEST(AssumptionBoundsTest, Toy) {
  const ToyModel m;
  const auto b = ComputeAssumptionBounds(m, 20, Rng(1));
  EXPECT_EQ(b.c1, 1.0);
  EXPECT_EQ(b.c2, 0.0);
  EXPECT_EQ(b.d3, 0.0);
}

// For the mixing kernel P(L1) - P(L2) = lambda (mu1 - mu2), so the W1 of the
// rows is lambda W1(mu1, mu2) <= lambda diam(S) TV(mu1, mu2); the estimate is
// bounded by that over the proxy denominator.
TEST(AssumptionBoundsTest, MixingKernelIsLipschitz) {
  Rng rng(5);
  const double lambda = 0.3;
  const MixingModel m = MixingModel::Random(4, 3, 0.5, lambda, rng);
  const auto b = ComputeAssumptionBounds(m, 30, Rng(2));
  EXPECT_GT(b.c2, 0.0);
  // TV(mu1, mu2) <= TV(L1, L2) and d_min(S x A) = 1.
  EXPECT_LE(b.c2, lambda * m.state_space().diam() + 1e-12);
  EXPECT_GT(b.d3, 0.0);
  EXPECT_LE(b.c1, 1.0);
}

TEST(AssumptionBoundsTest, RejectsEmptySample) {
  EXPECT_THROW(ComputeAssumptionBounds(ToyModel{}, 0, Rng(1)), ConfigError);
}

}  // namespace
}  // namespace gmfg
