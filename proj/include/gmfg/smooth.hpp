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

// Greedy and softened action selection, action gaps, and the decimal
// epsilon-net projection of population distributions.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gmfg/dist.hpp"
#include "gmfg/model.hpp"
#include "gmfg/population.hpp"

namespace gmfg {

inline constexpr double kTieTol = 1e-12;

enum class SmoothingKind { kArgmaxE, kSoftmaxC, kSoftmaxH };

inline const char* ToString(SmoothingKind k) {
  switch (k) {
    case SmoothingKind::kArgmaxE: return "argmax_e";
    case SmoothingKind::kSoftmaxC: return "softmax_c";
    case SmoothingKind::kSoftmaxH: return "softmax_h";
  }
  return "?";
}

inline SmoothingKind ParseSmoothingKind(const std::string& s) {
  if (s == "argmax_e") return SmoothingKind::kArgmaxE;
  if (s == "softmax_c") return SmoothingKind::kSoftmaxC;
  if (s == "softmax_h") return SmoothingKind::kSoftmaxH;
  throw ConfigError("unknown smoothing kind '" + s + "'");
}

struct SmoothingConfig {
  SmoothingKind kind = SmoothingKind::kSoftmaxC;
  double c = 4.0;
  double c_prime = -1.0;  // <= 0 means c_prime = c
  // Knots (x_i, h(x_i)) of a piecewise-linear link, x strictly increasing.
  // Empty means h(x) = c x.
  std::vector<std::pair<double, double>> h_table;

  double ResolvedCPrime() const { return c_prime > 0.0 ? c_prime : c; }

  void Validate() const {
    if (kind == SmoothingKind::kArgmaxE) return;
    const double cp = ResolvedCPrime();
    if (!(c > 0.0) || !(cp > 0.0) || cp > c) throw ConfigError("smoothing: need c >= c' > 0");
    if (kind == SmoothingKind::kSoftmaxH) {
      for (std::size_t i = 0; i < h_table.size(); ++i) {
        for (std::size_t j = i + 1; j < h_table.size(); ++j) {
          const double dx = h_table[j].first - h_table[i].first;
          const double dh = h_table[j].second - h_table[i].second;
          if (!(dx > 0.0)) throw ConfigError("smoothing: h_table knots must be strictly increasing");
          if (dh < cp * dx - 1e-12 || dh > c * dx + 1e-12) {
            throw ConfigError("smoothing: h_table violates c'(x-y) <= h(x)-h(y) <= c(x-y)");
          }
        }
      }
    }
  }

  double Link(double x) const {
    if (kind != SmoothingKind::kSoftmaxH || h_table.size() < 2) return c * x;
    const auto& t = h_table;
    std::size_t i = 0;
    if (x >= t.back().first) {
      i = t.size() - 2;
    } else if (x > t.front().first) {
      while (t[i + 1].first < x) ++i;
    }
    const double slope = (t[i + 1].second - t[i].second) / (t[i + 1].first - t[i].first);
    return t[i].second + slope * (x - t[i].first);
  }
};

// Uniform over {i : x_i >= max x - kTieTol}.
inline std::vector<double> ArgmaxE(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("argmax_e: empty input");
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size(), 0.0);
  int count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= m - kTieTol) {
      out[i] = 1.0;
      ++count;
    }
  }
  for (double& v : out) v /= count;
  return out;
}

inline std::vector<double> SoftmaxH(std::span<const double> x, const SmoothingConfig& cfg) {
  if (x.empty()) throw InvalidInput("softmax: empty input");
  std::vector<double> out(x.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, out[i] = cfg.Link(x[i]));
  double total = 0.0;
  for (double& v : out) total += (v = std::exp(v - m));
  for (double& v : out) v /= total;
  return out;
}

inline std::vector<double> SoftmaxC(std::span<const double> x, double c) {
  SmoothingConfig cfg;
  cfg.kind = SmoothingKind::kSoftmaxC;
  cfg.c = c;
  return SoftmaxH(x, cfg);
}

inline std::vector<double> Smooth(std::span<const double> x, const SmoothingConfig& cfg) {
  return cfg.kind == SmoothingKind::kArgmaxE ? ArgmaxE(x) : SoftmaxH(x, cfg);
}

inline Policy SmoothPolicy(const QTable& q, const SmoothingConfig& cfg) {
  const int ns = q.num_states(), na = q.num_actions();
  std::vector<double> rows;
  rows.reserve(static_cast<std::size_t>(ns) * na);
  for (int s = 0; s < ns; ++s) {
    const auto r = Smooth(q.row(s), cfg);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return Policy(ns, na, std::move(rows));
}

// Best value minus best non-argmax value; +inf when every entry is maximal.
inline double ActionGap(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("action_gap: empty input");
  const double m = *std::max_element(x.begin(), x.end());
  double second = -std::numeric_limits<double>::infinity();
  for (double v : x) {
    if (v < m - kTieTol) second = std::max(second, v);
  }
  return m - second;
}

inline double ActionGap(const QTable& q, int s) { return ActionGap(q.row(s)); }

inline double MinActionGap(const QTable& q) {
  double g = std::numeric_limits<double>::infinity();
  for (int s = 0; s < q.num_states(); ++s) g = std::min(g, ActionGap(q, s));
  return g;
}

struct EpsNetConfig {
  int digits = 4;

  void Validate() const {
    if (digits < 1 || digits > 15) throw ConfigError("eps_net: digits must lie in [1, 15]");
  }
  // TV radius |S||A| 10^-digits / 2.
  double TvRadius(int cells) const { return cells * std::pow(10.0, -digits) / 2.0; }
};

inline MeanField ProjectEpsNet(const MeanField& L, const EpsNetConfig& cfg) {
  cfg.Validate();
  std::int64_t units = 1;
  for (int i = 0; i < cfg.digits; ++i) units *= 10;
  return FromCounts(L.num_states(), L.num_actions(), LargestRemainder(L.weights(), units), units);
}

}  // namespace gmfg
