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

// Finite probability spaces, distributions over them, and the distances used
// throughout the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmfg/errors.hpp"
#include "gmfg/rng.hpp"

namespace gmfg {

// Tolerance for unit mass / nonnegativity at construction.
inline constexpr double kMassTol = 1e-9;
// Tolerance for fixed-point residuals (invariant distributions etc.).
inline constexpr double kResidualTol = 1e-8;

// A finite set embedded in R^k. Index i is mapped to coords(i).
class FiniteSpace {
 public:
  FiniteSpace() = default;

  explicit FiniteSpace(std::vector<std::vector<double>> points) : points_(std::move(points)) {
    if (points_.empty()) throw InvalidInput("FiniteSpace: size must be >= 1");
    const std::size_t dim = points_.front().size();
    if (dim == 0) throw InvalidInput("FiniteSpace: embedding dimension must be >= 1");
    for (const auto& p : points_) {
      if (p.size() != dim) throw DimensionError("FiniteSpace: ragged embedding");
    }
    d_min_ = points_.size() == 1 ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      for (std::size_t j = i + 1; j < points_.size(); ++j) {
        const double d = Distance(i, j);
        if (!(d > 0.0)) throw InvalidInput("FiniteSpace: embeddings must be pairwise distinct");
        d_min_ = std::min(d_min_, d);
        diam_ = std::max(diam_, d);
      }
    }
  }

  // {0, 1, ..., n-1} on the real line.
  static FiniteSpace Integers(int n, int first = 0) {
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) pts.push_back({static_cast<double>(first + i)});
    return FiniteSpace(std::move(pts));
  }

  int size() const { return static_cast<int>(points_.size()); }
  int dim() const { return static_cast<int>(points_.front().size()); }
  const std::vector<double>& coords(int i) const { return points_[i]; }
  double d_min() const { return d_min_; }
  double diam() const { return diam_; }

  double Distance(std::size_t i, std::size_t j) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < points_[i].size(); ++k) {
      const double d = points_[i][k] - points_[j][k];
      acc += d * d;
    }
    return std::sqrt(acc);
  }

 private:
  std::vector<std::vector<double>> points_;
  double d_min_ = 0.0;
  double diam_ = 0.0;
};

namespace detail {

inline void ValidateSimplex(std::span<const double> w, const char* what) {
  if (w.empty()) throw InvalidInput(std::string(what) + ": empty support");
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < -kMassTol) {
      throw InvalidInput(std::string(what) + ": negative or non-finite weight");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    throw InvalidInput(std::string(what) + ": total mass " + std::to_string(total) + " != 1");
  }
}

}  // namespace detail

// Probability vector over a finite index set.
class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(std::vector<double> w) : w_(std::move(w)) {
    detail::ValidateSimplex(w_, "Distribution");
  }

  static Distribution Uniform(int n) { return Distribution(std::vector<double>(n, 1.0 / n)); }
  static Distribution PointMass(int n, int i) {
    std::vector<double> w(n, 0.0);
    w.at(i) = 1.0;
    return Distribution(std::move(w));
  }

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[i]; }
  std::span<const double> weights() const { return w_; }
  const std::vector<double>& vec() const { return w_; }

  int Sample(Rng& rng) const { return rng.Categorical(w_); }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> w_;
};

using StateDist = Distribution;
using ActionDist = Distribution;

// Row-stochastic table pi(a | s).
class Policy {
 public:
  Policy() = default;
  Policy(int num_states, int num_actions, std::vector<double> rows)
      : ns_(num_states), na_(num_actions), p_(std::move(rows)) {
    if (static_cast<int>(p_.size()) != ns_ * na_) throw DimensionError("Policy: table size");
    for (int s = 0; s < ns_; ++s) detail::ValidateSimplex(row(s), "Policy row");
  }

  static Policy Uniform(int ns, int na) {
    return Policy(ns, na, std::vector<double>(static_cast<std::size_t>(ns) * na, 1.0 / na));
  }
  static Policy Deterministic(int na, const std::vector<int>& actions) {
    const int ns = static_cast<int>(actions.size());
    std::vector<double> p(static_cast<std::size_t>(ns) * na, 0.0);
    for (int s = 0; s < ns; ++s) p[static_cast<std::size_t>(s) * na + actions[s]] = 1.0;
    return Policy(ns, na, std::move(p));
  }

  int num_states() const { return ns_; }
  int num_actions() const { return na_; }
  double operator()(int s, int a) const { return p_[static_cast<std::size_t>(s) * na_ + a]; }
  std::span<const double> row(int s) const {
    return {p_.data() + static_cast<std::size_t>(s) * na_, static_cast<std::size_t>(na_)};
  }
  const std::vector<double>& table() const { return p_; }

  int Sample(int s, Rng& rng) const { return rng.Categorical(row(s)); }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  int ns_ = 0;
  int na_ = 0;
  std::vector<double> p_;
};

// Joint population state-action distribution L(s, a).
class MeanField {
 public:
  MeanField() = default;
  MeanField(int num_states, int num_actions, std::vector<double> weights)
      : ns_(num_states), na_(num_actions), w_(std::move(weights)) {
    if (static_cast<int>(w_.size()) != ns_ * na_) throw DimensionError("MeanField: table size");
    detail::ValidateSimplex(w_, "MeanField");
  }

  static MeanField Uniform(int ns, int na) {
    const std::size_t n = static_cast<std::size_t>(ns) * na;
    return MeanField(ns, na, std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  // L(s, a) = mu(s) pi(a | s).
  static MeanField FromPolicy(const StateDist& mu, const Policy& pi) {
    const int ns = pi.num_states(), na = pi.num_actions();
    if (mu.size() != ns) throw DimensionError("MeanField::FromPolicy: state count");
    std::vector<double> w(static_cast<std::size_t>(ns) * na);
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) w[static_cast<std::size_t>(s) * na + a] = mu[s] * pi(s, a);
    }
    return MeanField(ns, na, std::move(w));
  }

  // Uniform draw from the simplex over S x A (flat Dirichlet).
  static MeanField RandomUniform(int ns, int na, Rng& rng) {
    std::vector<double> w(static_cast<std::size_t>(ns) * na);
    double total = 0.0;
    for (double& x : w) total += (x = rng.Exponential());
    for (double& x : w) x /= total;
    return MeanField(ns, na, std::move(w));
  }

  int num_states() const { return ns_; }
  int num_actions() const { return na_; }
  double operator()(int s, int a) const { return w_[static_cast<std::size_t>(s) * na_ + a]; }
  std::span<const double> weights() const { return w_; }
  const std::vector<double>& vec() const { return w_; }

  StateDist StateMarginal() const {
    std::vector<double> mu(ns_, 0.0);
    for (int s = 0; s < ns_; ++s) {
      for (int a = 0; a < na_; ++a) mu[s] += (*this)(s, a);
    }
    return Normalized(std::move(mu));
  }

  ActionDist ActionMarginal() const {
    std::vector<double> alpha(na_, 0.0);
    for (int s = 0; s < ns_; ++s) {
      for (int a = 0; a < na_; ++a) alpha[a] += (*this)(s, a);
    }
    return Normalized(std::move(alpha));
  }

  friend bool operator==(const MeanField&, const MeanField&) = default;

 private:
  // Marginal sums can drift by a few ulps; renormalize so the result is a
  // valid distribution in its own right.
  static Distribution Normalized(std::vector<double> v) {
    double total = 0.0;
    for (double& x : v) {
      x = std::max(x, 0.0);
      total += x;
    }
    for (double& x : v) x /= total;
    return Distribution(std::move(v));
  }

  int ns_ = 0;
  int na_ = 0;
  std::vector<double> w_;
};

inline std::pair<StateDist, ActionDist> Marginals(const MeanField& L) {
  return {L.StateMarginal(), L.ActionMarginal()};
}

inline double L1Distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("l1_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
  return acc;
}

inline double TvDistance(std::span<const double> x, std::span<const double> y) {
  return L1Distance(x, y) / 2.0;
}

// W1 on a 1-D embedding via the CDF formula
//   sum_k |F_x(k) - F_y(k)| (c_{k+1} - c_k)
// over the coordinates sorted ascending.
inline double W1Distance1d(std::span<const double> x, std::span<const double> y,
                           const FiniteSpace& space) {
  if (space.dim() != 1) throw GeometryError("w1_distance_1d: embedding is not 1-D");
  if (x.size() != y.size() || static_cast<int>(x.size()) != space.size()) {
    throw DimensionError("w1_distance_1d: size mismatch");
  }
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return space.coords(a)[0] < space.coords(b)[0]; });
  double fx = 0.0, fy = 0.0, acc = 0.0;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    fx += x[order[k]];
    fy += y[order[k]];
    acc += std::abs(fx - fy) * (space.coords(order[k + 1])[0] - space.coords(order[k])[0]);
  }
  return acc;
}

// W2 between two distributions on two points at unit distance.
inline double W2TwoPoint(std::span<const double> x, std::span<const double> y) {
  if (x.size() != 2 || y.size() != 2) throw GeometryError("w2_two_point: support size must be 2");
  return std::sqrt(std::abs(x[1] - y[1]));
}

// Dense row-stochastic n x n matrix.
struct StochasticMatrix {
  int n = 0;
  std::vector<double> p;  // row-major, p[i * n + j] = P(j | i)

  double operator()(int i, int j) const { return p[static_cast<std::size_t>(i) * n + j]; }
  double& operator()(int i, int j) { return p[static_cast<std::size_t>(i) * n + j]; }

  // mu P
  std::vector<double> LeftMultiply(std::span<const double> mu) const {
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
      if (mu[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) out[j] += mu[i] * (*this)(i, j);
    }
    return out;
  }
};

struct InvariantOptions {
  double damping = 1e-6;
  long power_iterations = 10'000;
  long max_iterations = 1'000'000;
};

// Stationary distribution of a row-stochastic matrix by power iteration.
//
// Phase one iterates the damped chain (1 - theta) P + theta * uniform from
// the uniform start, which converges on periodic and reducible chains. When
// several closed classes make that iteration crawl at rate 1 - theta, its
// limit is obtained from the linear system mu (I - (1 - theta) P) = theta u
// instead. The damped limit is only O(theta)-invariant for P itself, so phase
// two polishes with the lazy chain (I + P) / 2, which shares P's invariant
// distributions and is aperiodic. Throws ConvergenceError if the undamped
// residual ||mu P - mu||_1 stays above kResidualTol.
inline StateDist InvariantDistribution(const StochasticMatrix& P, const InvariantOptions& opt = {}) {
  const int n = P.n;
  if (n <= 0 || static_cast<int>(P.p.size()) != n * n) throw DimensionError("invariant_distribution: shape");
  for (int i = 0; i < n; ++i) {
    detail::ValidateSimplex(std::span<const double>(P.p.data() + static_cast<std::size_t>(i) * n, n),
                            "transition row");
  }
  const double theta = opt.damping;
  std::vector<double> mu(n, 1.0 / n);
  auto residual = [&](const std::vector<double>& m) { return L1Distance(P.LeftMultiply(m), m); };

  bool settled = false;
  for (long it = 0; it < std::min(opt.power_iterations, opt.max_iterations); ++it) {
    std::vector<double> next = P.LeftMultiply(mu);
    for (double& x : next) x = (1.0 - theta) * x + theta / n;
    const double step = L1Distance(next, mu);
    mu = std::move(next);
    if (step <= 1e-14) {
      settled = true;
      break;
    }
  }
  if (!settled) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(j, i) -= (1.0 - theta) * P(i, j);
    }
    const Eigen::VectorXd x = A.partialPivLu().solve(Eigen::VectorXd::Constant(n, theta / n));
    if (!x.allFinite()) throw ConvergenceError("invariant_distribution: damped chain is singular");
    mu.assign(x.data(), x.data() + n);
  }

  for (long it = 0; it < opt.max_iterations && residual(mu) > 1e-12; ++it) {
    const std::vector<double> moved = P.LeftMultiply(mu);
    for (int j = 0; j < n; ++j) mu[j] = 0.5 * (mu[j] + moved[j]);
  }
  double total = 0.0;
  for (double& x : mu) total += (x = std::max(x, 0.0));
  for (double& x : mu) x /= total;
  if (residual(mu) > kResidualTol) {
    throw ConvergenceError("invariant_distribution: residual above tolerance");
  }
  return StateDist(std::move(mu));
}

}  // namespace gmfg
