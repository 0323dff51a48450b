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

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace gmfg {

namespace detail {

// SplitMix64 finalizer; a bijection on 64-bit words with full avalanche.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t HashString(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based generator: the i-th output is Mix64(key + i * golden), so a
// stream is fully described by (key, counter). Streams for distinct
// (seed, replicate, purpose) tuples are derived with Rng::Stream and never
// share state, which keeps replicated runs bit-reproducible regardless of
// how they are scheduled onto threads.
//
// Satisfies UniformRandomBitGenerator; the helpers below avoid the
// implementation-defined std:: distributions on purpose.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(detail::Mix64(key ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    return detail::Mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  // Independent child stream. Children of the same parent with different ids
  // are independent of each other and of the parent.
  Rng Stream(std::uint64_t id) const {
    Rng child;
    child.key_ = detail::Mix64(key_ ^ detail::Mix64(id + 0x3c6ef372fe94f82bULL));
    return child;
  }
  Rng Stream(std::string_view purpose) const { return Stream(detail::HashString(purpose)); }

  // Uniform on [0, 1) with 53 bits.
  double Uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe for log().
  double UniformOpen() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform integer on [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t Below(std::uint64_t n) {
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  double Exponential() { return -std::log(UniformOpen()); }

  // Inverse-CDF draw from unnormalized nonnegative weights.
  int Categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = Uniform() * total;
    int last_positive = -1;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = static_cast<int>(i);
      if (u < weights[i]) return static_cast<int>(i);
      u -= weights[i];
    }
    return last_positive;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace gmfg
