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
#include <vector>

#include "gmfg/envs/auction.hpp"
#include "gmfg/envs/pricing.hpp"
#include "gmfg/envs/toy.hpp"
#include "gmfg/loops.hpp"
#include "oracles.hpp"

namespace gmfg {
namespace {

using testing::EnumerateOptimalValue;
using testing::LinearSolveValue;
using testing::MixingModel;

double Step(const MeanField& a, const MeanField& b) { return L1Distance(a.weights(), b.weights()); }

LoopConfig ExactConfig(SmoothingKind kind, int K) {
  LoopConfig cfg;
  cfg.outer_iterations = K;
  cfg.inner = InnerSolver::kExactVi;
  cfg.smoothing.kind = kind;
  return cfg;
}

TEST(Gamma1, ToyEquilibriumIsSelfConsistent) {
  const ToyModel m;
  const MeanField star = m.Equilibrium();
  const Policy pi = Gamma1Exact(m, star);
  for (int s = 0; s < 2; ++s) {
    EXPECT_EQ(pi(s, 0), 0.5);
    EXPECT_EQ(pi(s, 1), 0.5);
  }
  EXPECT_EQ(Step(Gamma2Exact(m, pi, star), star), 0.0);
}

TEST(Gamma1, ActionIndependentModelGivesUniformPolicy) {
  Rng rng(1);
  const int ns = 4, na = 3;
  std::vector<double> p, r;
  for (int s = 0; s < ns; ++s) {
    const auto row = testing::RandomSimplex(ns, rng);
    const double reward = rng.Uniform();
    for (int a = 0; a < na; ++a) {
      p.insert(p.end(), row.begin(), row.end());
      r.push_back(reward);
    }
  }
  const MixingModel m(ns, na, 0.7, p, r, 0.0);
  const Policy pi = Gamma1Exact(m, MeanField::Uniform(ns, na));
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) EXPECT_DOUBLE_EQ(pi(s, a), 1.0 / na);
  }
}

TEST(Gamma1, TruncatedPricingGreedyIsOptimal) {
  const PricingModel model(PricingParams::WithSizes(3, 3, 1));
  ASSERT_EQ(model.num_states(), 3);
  ASSERT_EQ(model.num_actions(), 3);
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const MeanField L = trial == 0 ? MeanField::Uniform(3, 3) : MeanField::RandomUniform(3, 3, rng);
    const Mdp m(model, L);
    const auto best = EnumerateOptimalValue(m);
    const auto greedy = LinearSolveValue(m, Gamma1Exact(model, L));
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(greedy[s], best[s], 1e-9);
  }
}

TEST(Gamma2, ToyEquilibrium) {
  const ToyModel m;
  EXPECT_EQ(Step(Gamma2Exact(m, Policy::Uniform(2, 2), m.Equilibrium()), m.Equilibrium()), 0.0);
}

TEST(Gamma2, AbsorbingState) {
  // State 2 is absorbing under every action.
  Rng rng(3);
  std::vector<double> p, r(9, 0.5);
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 3; ++a) {
      const auto row = s == 2 ? std::vector<double>{0, 0, 1} : testing::RandomSimplex(3, rng);
      p.insert(p.end(), row.begin(), row.end());
    }
  }
  const MixingModel m(3, 3, 0.5, p, r, 0.0);
  const Policy pi(3, 3, {1, 0, 0, 0, 1, 0, 0.2, 0.3, 0.5});
  const MeanField L(3, 3, {0, 0, 0, 0, 0, 0, 0.1, 0.6, 0.3});
  const MeanField next = Gamma2Exact(m, pi, L);
  EXPECT_DOUBLE_EQ(next.StateMarginal()[2], 1.0);
  EXPECT_DOUBLE_EQ(next(2, 2), 0.5);
}

TEST(Gamma2, MatchesTwoStepSampling) {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const MixingModel m = MixingModel::Random(3, 3, 0.5, 0.4, rng);
    const MeanField L = MeanField::RandomUniform(3, 3, rng);
    std::vector<double> rows;
    for (int s = 0; s < 3; ++s) {
      const auto row = testing::RandomSimplex(3, rng);
      rows.insert(rows.end(), row.begin(), row.end());
    }
    const Policy pi(3, 3, rows);
    const MeanField exact = Gamma2Exact(m, pi, L);
    const auto frozen = m.Freeze(L);
    const StateDist mu = L.StateMarginal();
    std::vector<double> counts(9, 0.0), row(3);
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
      const int s = mu.Sample(rng);
      frozen->Transition(s, pi.Sample(s, rng), row);
      const int s2 = rng.Categorical(row);
      const int a2 = pi.Sample(s2, rng);
      counts[s2 * 3 + a2] += 1.0 / n;
    }
    EXPECT_LE(TvDistance(exact.weights(), counts), 0.01);
  }
}

TEST(Gamma2, PreservesMass) {
  Rng rng(5);
  const PricingModel m;
  for (int trial = 0; trial < 100; ++trial) {
    const MeanField L = MeanField::RandomUniform(m.num_states(), m.num_actions(), rng);
    const MeanField next = Gamma2Exact(m, Gamma1Exact(m, L), L);
    double total = 0.0;
    for (double w : next.weights()) total += w;
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(GammaComposed, ToyFixedPoint) {
  const ToyModel m;
  EXPECT_EQ(Step(GammaComposed(m, m.Equilibrium()), m.Equilibrium()), 0.0);
}

// The greedy map is piecewise constant in the price, so the composed map is
// nonexpansive between populations that share a greedy policy and jumps
// only across a switching price.
TEST(GammaComposed, PricingPairsExpandOnlyAcrossPolicySwitches) {
  const PricingModel m;
  Rng rng(6);
  int switches = 0;
  for (int trial = 0; trial < 4000; ++trial) {
    const MeanField a = MeanField::RandomUniform(m.num_states(), m.num_actions(), rng);
    const MeanField b = MeanField::RandomUniform(m.num_states(), m.num_actions(), rng);
    const Policy pa = Gamma1Exact(m, a), pb = Gamma1Exact(m, b);
    const double ratio = Step(Gamma2Exact(m, pa, a), Gamma2Exact(m, pb, b)) / Step(a, b);
    if (pa == pb) {
      EXPECT_LE(ratio, 1.0);
    } else {
      ++switches;
    }
  }
  EXPECT_LE(switches, 40);
}

// Under argmax_e the exact map on the default pricing grid has no fixed
// point: from the uniform start it settles into a period-two orbit whose
// greedy production level alternates.
TEST(GammaComposed, PricingExactIterationFromUniform) {
  const PricingModel m;
  MeanField L = MeanField::Uniform(m.num_states(), m.num_actions());
  std::vector<MeanField> path{L};
  for (int k = 0; k < 50; ++k) path.push_back(L = GammaComposed(m, L));
  const MeanField& last = path.back();
  EXPECT_LT(Step(last, path[path.size() - 3]), 1e-6);
  EXPECT_GT(Step(last, path[path.size() - 2]), 0.1);
  const double p1 = m.Price(last), p2 = m.Price(path[path.size() - 2]);
  EXPECT_NEAR(std::min(p1, p2), 2.5, 0.05);
  EXPECT_NEAR(std::max(p1, p2), 2.77, 0.05);
}

TEST(GmfVTest, ZeroIterationsReturnsInitial) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 0;
  Rng rng(7);
  cfg.initial = ProjectEpsNet(MeanField::RandomUniform(m.num_states(), m.num_actions(), rng), EpsNetConfig{});
  const RunRecord rec = GmfV(m, cfg, Rng(1));
  EXPECT_TRUE(rec.iterations.empty());
  EXPECT_EQ(Step(rec.final_population, *cfg.initial), 0.0);
  EXPECT_EQ(Step(GmfNaive(m, cfg, Rng(1)).final_population, *cfg.initial), 0.0);
}

TEST(GmfVTest, ToyExactArgmaxReachesEquilibrium) {
  const ToyModel m;
  const RunRecord rec = GmfV(m, ExactConfig(SmoothingKind::kArgmaxE, 3), Rng(1));
  ASSERT_EQ(rec.iterations.size(), 3u);
  for (const auto& it : rec.iterations) EXPECT_LT(Step(it.next, m.Equilibrium()), 1e-6);
  EXPECT_NEAR(rec.iterations.back().exploitability, 0.0, 1e-6);
}

TEST(GmfVTest, ToySoftmaxSettlesFromSkewedStart) {
  const ToyModel m;
  LoopConfig cfg = ExactConfig(SmoothingKind::kSoftmaxC, 6);
  cfg.initial = MeanField(2, 2, {0.7, 0.1, 0.1, 0.1});
  const RunRecord rec = GmfV(m, cfg, Rng(1));
  EXPECT_LT(Step(rec.final_population, m.Equilibrium()), 1e-3);
  EXPECT_LT(rec.iterations.back().step_l1, 1e-3);
}

TEST(GmfVTest, ExactArgmaxMatchesComposedIteration) {
  const PricingModel m;
  LoopConfig cfg = ExactConfig(SmoothingKind::kArgmaxE, 6);
  cfg.project = false;
  cfg.track_exploitability = false;
  const RunRecord rec = GmfV(m, cfg, Rng(1));
  MeanField L = MeanField::Uniform(m.num_states(), m.num_actions());
  for (const auto& it : rec.iterations) {
    L = GammaComposed(m, L);
    EXPECT_LE(Step(it.next, L), 1e-12);
  }
}

TEST(GmfVTest, ProjectedIteratesLieOnGrid) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 3;
  cfg.track_exploitability = false;
  const RunRecord rec = GmfV(m, cfg, Rng(2));
  for (const auto& it : rec.iterations) {
    for (double w : it.next.weights()) EXPECT_NEAR(w * 1e4, std::round(w * 1e4), 1e-6);
  }
}

TEST(GmfVTest, QLearningPricingIsNearlyUnexploitable) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 10;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RunRecord rec = GmfV(m, cfg, Rng(seed));
    if (rec.iterations.back().exploitability < 0.05) ++ok;
  }
  EXPECT_GE(ok, 19);
}

TEST(GmfVTest, RecordsAreComplete) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 2;
  const RunRecord rec = GmfV(m, cfg, Rng(3));
  ASSERT_EQ(rec.iterations.size(), 2u);
  for (const auto& it : rec.iterations) {
    EXPECT_FALSE(std::isnan(it.exploitability));
    EXPECT_GE(it.exploitability, 0.0);
    EXPECT_GT(it.min_action_gap, 0.0);
    EXPECT_GE(it.wall_seconds, 0.0);
    ASSERT_FALSE(it.summaries.empty());
    EXPECT_EQ(it.summaries.front().first, "price");
    EXPECT_NEAR(it.summaries.front().second, m.Price(it.next), 1e-12);
  }
  EXPECT_EQ(Step(rec.iterations[1].population, rec.iterations[0].next), 0.0);
}

TEST(GmfVTest, PopulationDependentKernelSkipsExploitability) {
  const AuctionModel m;
  LoopConfig cfg = ExactConfig(SmoothingKind::kSoftmaxC, 1);
  const RunRecord rec = GmfV(m, cfg, Rng(1));
  EXPECT_TRUE(std::isnan(rec.iterations[0].exploitability));
  EXPECT_THROW(ExploitabilityMf(m, Policy::Uniform(m.num_states(), m.num_actions())), Error);
}

TEST(GmfPTest, ExactPolicyWithExactEvaluationMatchesGmfV) {
  const PricingModel m;
  LoopConfig v = ExactConfig(SmoothingKind::kSoftmaxC, 5);
  v.track_exploitability = false;
  LoopConfig p = v;
  p.inner = InnerSolver::kExactPolicy;
  p.td = TdMode::kExact;
  const RunRecord a = GmfV(m, v, Rng(1)), b = GmfP(m, p, Rng(1));
  for (std::size_t k = 0; k < a.iterations.size(); ++k) {
    EXPECT_LE(Step(a.iterations[k].next, b.iterations[k].next), 1e-8);
  }
}

TEST(GmfPTest, TrpoRunsAndRecords) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 2;
  cfg.inner = InnerSolver::kTrpo;
  const RunRecord rec = GmfP(m, cfg, Rng(4));
  ASSERT_EQ(rec.iterations.size(), 2u);
  EXPECT_LT(rec.iterations.back().exploitability, 0.5);
}

TEST(LoopConfigTest, WrappersRejectMismatchedSolvers) {
  const ToyModel m;
  LoopConfig cfg;
  cfg.inner = InnerSolver::kTrpo;
  EXPECT_THROW(GmfV(m, cfg, Rng(1)), ConfigError);
  cfg.inner = InnerSolver::kQSync;
  EXPECT_THROW(GmfP(m, cfg, Rng(1)), ConfigError);
  EXPECT_THROW(GmfWeak(m, cfg, Rng(1)), ConfigError);
  cfg.outer_iterations = -1;
  EXPECT_THROW(RunLoop(m, cfg, Rng(1)), ConfigError);
  EXPECT_EQ(ParseInnerSolver("q_async"), InnerSolver::kQAsync);
  EXPECT_THROW(ParseInnerSolver("sarsa"), ConfigError);
}

TEST(GmfNaiveTest, ForcesArgmaxWithoutProjection) {
  const PricingModel m;
  LoopConfig cfg = ExactConfig(SmoothingKind::kSoftmaxC, 4);
  cfg.track_exploitability = false;
  const RunRecord rec = GmfNaive(m, cfg, Rng(1));
  MeanField L = MeanField::Uniform(m.num_states(), m.num_actions());
  for (const auto& it : rec.iterations) {
    L = GammaComposed(m, L);
    EXPECT_LE(Step(it.next, L), 1e-12);
  }
}

TEST(GmfNaiveTest, ExactInnerOnContractiveMapConverges) {
  Rng rng(8);
  const MixingModel m = MixingModel::Random(4, 3, 0.5, 0.0, rng);
  LoopConfig cfg = ExactConfig(SmoothingKind::kArgmaxE, 50);
  const RunRecord rec = GmfNaive(m, cfg, Rng(1));
  EXPECT_LT(rec.iterations.back().step_l1, 1e-8);
}

TEST(GmfWeakTest, SinglePlayerIsPointMass) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 4;
  cfg.weak_population = 1;
  cfg.track_exploitability = false;
  const RunRecord rec = GmfWeak(m, cfg, Rng(1));
  EXPECT_TRUE(rec.snapped_initial);
  for (const auto& it : rec.iterations) {
    EXPECT_EQ(*std::max_element(it.next.weights().begin(), it.next.weights().end()), 1.0);
  }
}

TEST(GmfWeakTest, IteratesStayEmpirical) {
  const PricingModel m;
  LoopConfig cfg;
  cfg.outer_iterations = 3;
  cfg.weak_population = 20;
  cfg.track_exploitability = false;
  const RunRecord rec = GmfWeak(m, cfg, Rng(2));
  EXPECT_TRUE(IsEmpirical(rec.initial, 20));
  for (const auto& it : rec.iterations) EXPECT_TRUE(IsEmpirical(it.next, 20));
}

TEST(GmfWeakTest, EmpiricalInitialIsKept) {
  const ToyModel m;
  LoopConfig cfg = ExactConfig(SmoothingKind::kSoftmaxC, 1);
  cfg.weak_population = 4;
  cfg.initial = MeanField(2, 2, {0.25, 0.25, 0.5, 0.0});
  const RunRecord rec = GmfWeak(m, cfg, Rng(3));
  EXPECT_FALSE(rec.snapped_initial);
  EXPECT_EQ(Step(rec.initial, *cfg.initial), 0.0);
}

TEST(GmfWeakTest, UnbiasedAndConcentratedAroundGamma2) {
  Rng build(9);
  const MixingModel m = MixingModel::Random(3, 3, 0.5, 0.3, build);
  const int N = 20;
  LoopConfig cfg = ExactConfig(SmoothingKind::kSoftmaxC, 1);
  cfg.weak_population = N;
  cfg.initial = SnapToEmpirical(MeanField::RandomUniform(3, 3, build), N);
  const RunRecord first = GmfWeak(m, cfg, Rng(0));
  const MeanField target = Gamma2Exact(m, first.iterations[0].policy, *cfg.initial);
  const double radius = std::sqrt(std::log(2.0 * 9 / 0.05) / (2.0 * N));
  const int draws = 10'000;
  std::vector<double> mean(9, 0.0);
  int inside = 0;
  for (int i = 0; i < draws; ++i) {
    const RunRecord rec = GmfWeak(m, cfg, Rng(static_cast<std::uint64_t>(i)));
    const auto w = rec.iterations[0].next.weights();
    double dev = 0.0;
    for (int c = 0; c < 9; ++c) {
      mean[c] += w[c] / draws;
      dev = std::max(dev, std::abs(w[c] - target.weights()[c]));
    }
    if (dev <= radius) ++inside;
  }
  EXPECT_LE(TvDistance(mean, target.weights()), 0.02);
  EXPECT_GE(inside, static_cast<int>(0.95 * draws));
}

TEST(LoopDeterminism, SameSeedSameRecord) {
  const PricingModel m;
  for (int weak : {0, 20}) {
    LoopConfig cfg;
    cfg.outer_iterations = 3;
    cfg.weak_population = weak;
    cfg.inner = InnerSolver::kQAsync;
    cfg.schedule = StepSchedule::Polynomial(0.7);
    const RunRecord a = RunLoop(m, cfg, Rng(11)), b = RunLoop(m, cfg, Rng(11));
    for (std::size_t k = 0; k < a.iterations.size(); ++k) {
      EXPECT_EQ(Step(a.iterations[k].next, b.iterations[k].next), 0.0);
      EXPECT_EQ(a.iterations[k].exploitability, b.iterations[k].exploitability);
    }
  }
}

}  // namespace
}  // namespace gmfg
