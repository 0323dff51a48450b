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

// Population-side maps: the one-step advance Gamma2 and the lattices of
// empirical measures (Emp_N and the decimal epsilon-net).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"

namespace gmfg {

// mu'(s') = sum_{s,a} mu(s) pi(a|s) P(s'|s,a,L);  L'(s',a') = mu'(s') pi(a'|s').
inline MeanField Gamma2(const FrozenModel& frozen, const Policy& pi, const MeanField& L) {
  const int ns = L.num_states(), na = L.num_actions();
  if (pi.num_states() != ns || pi.num_actions() != na) throw DimensionError("gamma2: policy shape");
  const StateDist mu = L.StateMarginal();
  std::vector<double> next(ns, 0.0), row(ns);
  for (int s = 0; s < ns; ++s) {
    if (mu[s] == 0.0) continue;
    for (int a = 0; a < na; ++a) {
      const double w = mu[s] * pi(s, a);
      if (w == 0.0) continue;
      frozen.Transition(s, a, row);
      for (int s2 = 0; s2 < ns; ++s2) next[s2] += w * row[s2];
    }
  }
  double total = 0.0;
  for (double x : next) total += x;
  for (double& x : next) x /= total;
  return MeanField::FromPolicy(StateDist(std::move(next)), pi);
}

inline MeanField Gamma2Exact(const Model& model, const Policy& pi, const MeanField& L) {
  model.CheckPopulation(L);
  return Gamma2(*model.Freeze(L), pi, L);
}

// Nonnegative integers summing to `units`, proportional to w: floor each
// cell, then hand out the remaining units by descending fractional part
// (ties to the lowest index).
inline std::vector<std::int64_t> LargestRemainder(std::span<const double> w, std::int64_t units) {
  const std::size_t n = w.size();
  std::vector<std::int64_t> counts(n);
  std::vector<std::int64_t> rem_key(n);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double scaled = std::max(w[i], 0.0) * static_cast<double>(units);
    const double fl = std::floor(scaled + 1e-9);
    counts[i] = static_cast<std::int64_t>(fl);
    rem_key[i] = std::llround(std::max(scaled - fl, 0.0) * 1e9);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem_key[a] > rem_key[b]; });
  std::int64_t deficit = units - assigned;
  for (std::size_t k = 0; deficit > 0; k = (k + 1) % n, --deficit) ++counts[order[k]];
  // Over-assignment is only possible through the +1e-9 snap; take it back
  // from the smallest remainders that still hold a unit.
  for (std::size_t k = n; deficit < 0 && k-- > 0;) {
    if (counts[order[k]] > 0) {
      --counts[order[k]];
      ++deficit;
    }
  }
  return counts;
}

inline bool IsEmpirical(const MeanField& L, int N) {
  if (N < 1) return false;
  for (double x : L.weights()) {
    const double scaled = x * N;
    if (std::abs(scaled - std::round(scaled)) > 1e-9 * std::max(1, N)) return false;
  }
  return true;
}

inline MeanField FromCounts(int ns, int na, const std::vector<std::int64_t>& counts, std::int64_t units) {
  std::vector<double> w(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w[i] = static_cast<double>(counts[i]) / static_cast<double>(units);
  }
  return MeanField(ns, na, std::move(w));
}

// Nearest member of Emp_N in the largest-remainder sense.
inline MeanField SnapToEmpirical(const MeanField& L, int N) {
  if (N < 1) throw InvalidInput("snap_to_empirical: N must be >= 1");
  return FromCounts(L.num_states(), L.num_actions(), LargestRemainder(L.weights(), N), N);
}

}  // namespace gmfg
