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

// The environment contract, the Q-table type, and the tabular MDP obtained by
// freezing a model at a population distribution L.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/errors.hpp"
#include "gmfg/rng.hpp"

namespace gmfg {

class QTable {
 public:
  QTable() = default;
  QTable(int num_states, int num_actions, double init = 0.0)
      : ns_(num_states), na_(num_actions), q_(static_cast<std::size_t>(num_states) * num_actions, init) {}

  int num_states() const { return ns_; }
  int num_actions() const { return na_; }
  double operator()(int s, int a) const { return q_[Index(s, a)]; }
  double& operator()(int s, int a) { return q_[Index(s, a)]; }
  std::span<const double> row(int s) const {
    return {q_.data() + static_cast<std::size_t>(s) * na_, static_cast<std::size_t>(na_)};
  }
  std::span<double> row(int s) {
    return {q_.data() + static_cast<std::size_t>(s) * na_, static_cast<std::size_t>(na_)};
  }
  const std::vector<double>& values() const { return q_; }

  double RowMax(int s) const {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : row(s)) m = std::max(m, x);
    return m;
  }

  // max_{s,a} |Q(s,a) - other(s,a)|
  double SupDistance(const QTable& other) const {
    if (other.ns_ != ns_ || other.na_ != na_) throw DimensionError("QTable: shape mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) d = std::max(d, std::abs(q_[i] - other.q_[i]));
    return d;
  }

 private:
  std::size_t Index(int s, int a) const { return static_cast<std::size_t>(s) * na_ + a; }

  int ns_ = 0;
  int na_ = 0;
  std::vector<double> q_;
};

// A model with the population argument fixed.
class FrozenModel {
 public:
  virtual ~FrozenModel() = default;
  // Writes P(. | s, a) into out (size |S|).
  virtual void Transition(int s, int a, std::span<double> out) const = 0;
  // Shifted reward, in [0, r_max].
  virtual double RewardMean(int s, int a) const = 0;
  virtual double RewardSample(int s, int a, Rng& rng) const = 0;
  virtual bool deterministic_rewards() const { return false; }
};

// P(s' | s, a, L), r(s, a, L), gamma, and the embeddings of S and A.
//
// Rewards seen by learners are the raw rewards plus reward_shift(), which
// places them in [0, r_max()].
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;
  virtual const FiniteSpace& state_space() const = 0;
  virtual const FiniteSpace& action_space() const = 0;
  virtual double gamma() const = 0;
  virtual double r_max() const = 0;
  virtual double reward_shift() const = 0;
  virtual bool transition_depends_on_population() const = 0;
  virtual std::unique_ptr<FrozenModel> Freeze(const MeanField& L) const = 0;

  // Named scalar summaries of a population (price, mean inventory, ...).
  virtual std::vector<std::pair<std::string, double>> Summaries(const MeanField& /*L*/) const {
    return {};
  }

  int num_states() const { return state_space().size(); }
  int num_actions() const { return action_space().size(); }
  double v_max() const { return r_max() / (1.0 - gamma()); }

  StateDist Transition(int s, int a, const MeanField& L) const {
    CheckPair(s, a);
    std::vector<double> out(num_states());
    Freeze(L)->Transition(s, a, out);
    return StateDist(std::move(out));
  }
  double RewardMean(int s, int a, const MeanField& L) const {
    CheckPair(s, a);
    return Freeze(L)->RewardMean(s, a);
  }
  double RewardSample(int s, int a, const MeanField& L, Rng& rng) const {
    CheckPair(s, a);
    return Freeze(L)->RewardSample(s, a, rng);
  }

  void CheckPopulation(const MeanField& L) const {
    if (L.num_states() != num_states() || L.num_actions() != num_actions()) {
      throw DimensionError(name() + ": population shape does not match the model");
    }
  }

 protected:
  void CheckPair(int s, int a) const {
    if (s < 0 || s >= num_states()) throw InvalidInput(name() + ": state out of range");
    if (a < 0 || a >= num_actions()) throw InvalidInput(name() + ": action out of range");
  }
};

// Tabular MDP: dense kernel, mean rewards, and a sampler for both.
class Mdp {
 public:
  Mdp(int num_states, int num_actions, double gamma, double r_max, std::vector<double> transitions,
      std::vector<double> reward_means, std::shared_ptr<const FrozenModel> sampler = nullptr)
      : ns_(num_states),
        na_(num_actions),
        gamma_(gamma),
        r_max_(r_max),
        p_(std::move(transitions)),
        r_(std::move(reward_means)),
        sampler_(std::move(sampler)) {
    if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidInput("Mdp: gamma must lie in (0, 1)");
    const std::size_t pairs = static_cast<std::size_t>(ns_) * na_;
    if (p_.size() != pairs * ns_ || r_.size() != pairs) throw DimensionError("Mdp: table sizes");
    for (std::size_t i = 0; i < pairs; ++i) {
      detail::ValidateSimplex(std::span<const double>(p_.data() + i * ns_, ns_), "Mdp transition row");
    }
    BuildSampler();
  }

  // M_L for a model frozen at L.
  Mdp(const Model& model, const MeanField& L)
      : Mdp(FromModel(model, L)) {}

  int num_states() const { return ns_; }
  int num_actions() const { return na_; }
  double gamma() const { return gamma_; }
  double r_max() const { return r_max_; }
  double v_max() const { return r_max_ / (1.0 - gamma_); }

  double P(int s, int a, int s2) const { return p_[(static_cast<std::size_t>(s) * na_ + a) * ns_ + s2]; }
  std::span<const double> Row(int s, int a) const {
    return {p_.data() + (static_cast<std::size_t>(s) * na_ + a) * ns_, static_cast<std::size_t>(ns_)};
  }
  double R(int s, int a) const { return r_[static_cast<std::size_t>(s) * na_ + a]; }

  int SampleNext(int s, int a, Rng& rng) const {
    const std::size_t pair = static_cast<std::size_t>(s) * na_ + a;
    const std::size_t lo = offsets_[pair], hi = offsets_[pair + 1];
    const double u = rng.Uniform();
    for (std::size_t i = lo; i + 1 < hi; ++i) {
      if (u < cdf_[i]) return support_[i];
    }
    return support_[hi - 1];
  }

  double SampleReward(int s, int a, Rng& rng) const {
    if (!sampler_ || sampler_->deterministic_rewards()) return R(s, a);
    return sampler_->RewardSample(s, a, rng);
  }

  // P^pi as a state-to-state matrix.
  StochasticMatrix Induced(const Policy& pi) const {
    CheckPolicy(pi);
    StochasticMatrix m{ns_, std::vector<double>(static_cast<std::size_t>(ns_) * ns_, 0.0)};
    for (int s = 0; s < ns_; ++s) {
      for (int a = 0; a < na_; ++a) {
        const double w = pi(s, a);
        if (w == 0.0) continue;
        const auto row = Row(s, a);
        for (int s2 = 0; s2 < ns_; ++s2) m(s, s2) += w * row[s2];
      }
    }
    return m;
  }

  void CheckPolicy(const Policy& pi) const {
    if (pi.num_states() != ns_ || pi.num_actions() != na_) throw DimensionError("Mdp: policy shape");
  }

 private:
  static Mdp FromModel(const Model& model, const MeanField& L) {
    model.CheckPopulation(L);
    const int ns = model.num_states(), na = model.num_actions();
    std::shared_ptr<const FrozenModel> frozen = model.Freeze(L);
    std::vector<double> p(static_cast<std::size_t>(ns) * na * ns);
    std::vector<double> r(static_cast<std::size_t>(ns) * na);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        const std::size_t pair = static_cast<std::size_t>(s) * na + a;
        frozen->Transition(s, a, std::span<double>(p.data() + pair * ns, ns));
        r[pair] = frozen->RewardMean(s, a);
      }
    }
    return Mdp(ns, na, model.gamma(), model.r_max(), std::move(p), std::move(r), std::move(frozen));
  }

  void BuildSampler() {
    const std::size_t pairs = static_cast<std::size_t>(ns_) * na_;
    offsets_.assign(pairs + 1, 0);
    for (std::size_t pair = 0; pair < pairs; ++pair) {
      double acc = 0.0;
      for (int s2 = 0; s2 < ns_; ++s2) {
        const double w = p_[pair * ns_ + s2];
        if (w <= 0.0) continue;
        acc += w;
        support_.push_back(s2);
        cdf_.push_back(acc);
      }
      offsets_[pair + 1] = support_.size();
    }
  }

  int ns_;
  int na_;
  double gamma_;
  double r_max_;
  std::vector<double> p_;
  std::vector<double> r_;
  std::shared_ptr<const FrozenModel> sampler_;
  std::vector<std::size_t> offsets_;
  std::vector<int> support_;
  std::vector<double> cdf_;
};

}  // namespace gmfg
