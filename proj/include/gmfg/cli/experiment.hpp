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


// Experiment configuration: every tunable has one registered key, used both
// to read config files and to write the resolved manifest.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gmfg/baselines.hpp"
#include "gmfg/cli/config_file.hpp"
#include "gmfg/envs/auction.hpp"
#include "gmfg/envs/nplayer.hpp"
#include "gmfg/envs/pricing.hpp"
#include "gmfg/envs/toy.hpp"
#include "gmfg/loops.hpp"
#include "gmfg/metrics.hpp"

namespace gmfg::cli {

inline const std::vector<std::string>& Commands() {
  static const std::vector<std::string> k{"train", "contraction", "compare", "evaluate", "sweep"};
  return k;
}

inline const std::vector<std::string>& Algorithms() {
  static const std::vector<std::string> k{"gmf_v", "gmf_p", "gmf_naive", "gmf_vw", "gmf_pw", "il", "mfq"};
  return k;
}

inline bool IsBaseline(const std::string& alg) { return alg == "il" || alg == "mfq"; }
inline bool IsWeak(const std::string& alg) { return alg == "gmf_vw" || alg == "gmf_pw"; }

struct ExperimentConfig {
  std::string command = "train";
  std::string env = "pricing";
  PricingParams pricing;
  ToyParams toy;
  AuctionParams auction;
  std::vector<std::string> algorithms{"gmf_v"};
  std::string inner = "auto";  // per-algorithm default
  std::string initial = "uniform";
  LoopConfig loop;
  BaselineConfig baseline;
  int players = 0;  // N of the N-player game; 0 disables N-player metrics
  int pairs = 1000;
  int eval_every = 0;  // N-player evaluation period in iterations; 0 means final only
  std::string sweep_key;
  std::vector<std::string> sweep_values;
  int replicates = 20;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = "gmfg_out";

  ExperimentConfig() { loop.track_exploitability = true; }
};

inline std::string FormatDouble(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline double ParseDouble(const std::string& s) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(x)) throw ConfigError("expected a finite number, got '" + s + "'");
  return x;
}

inline long long ParseInteger(const std::string& s) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("expected an integer, got '" + s + "'");
  return x;
}

inline std::uint64_t ParseUnsigned(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  if (s.empty() || s[0] == '-') throw ConfigError("expected a non-negative integer, got '" + s + "'");
  try {
    x = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return x;
}

inline bool ParseBool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

inline std::string JoinList(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out;
}

inline std::string OneOf(const std::string& s, const std::vector<std::string>& allowed, const std::string& what) {
  for (const auto& a : allowed) {
    if (s == a) return s;
  }
  throw ConfigError("unknown " + what + " '" + s + "' (expected one of: " + JoinList(allowed) + ")");
}

}  // namespace detail

struct Field {
  std::string key;
  std::string type;
  std::string help;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

namespace detail {

template <typename T>
using Access = T& (*)(ExperimentConfig&);

template <typename T>
Field Number(std::string key, std::string help, Access<T> at) {
  Field f{std::move(key), std::is_floating_point_v<T> ? "real" : "integer", std::move(help), nullptr, nullptr};
  f.get = [at](const ExperimentConfig& c) {
    const T v = at(const_cast<ExperimentConfig&>(c));
    if constexpr (std::is_floating_point_v<T>) {
      return FormatDouble(v);
    } else {
      return std::to_string(v);
    }
  };
  f.set = [at](ExperimentConfig& c, const std::string& s) {
    if constexpr (std::is_floating_point_v<T>) {
      at(c) = ParseDouble(s);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      at(c) = ParseUnsigned(s);
    } else {
      const long long x = ParseInteger(s);
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) {
        throw ConfigError("integer out of range: " + s);
      }
      at(c) = static_cast<T>(x);
    }
  };
  return f;
}

inline Field Flag(std::string key, std::string help, Access<bool> at) {
  return {std::move(key), "bool", std::move(help),
          [at](const ExperimentConfig& c) { return std::string(at(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
          [at](ExperimentConfig& c, const std::string& s) { at(c) = ParseBool(s); }};
}

inline Field Text(std::string key, std::string type, std::string help, Access<std::string> at,
                  std::vector<std::string> allowed = {}) {
  return {std::move(key), std::move(type), std::move(help),
          [at](const ExperimentConfig& c) { return at(const_cast<ExperimentConfig&>(c)); },
          [at, allowed](ExperimentConfig& c, const std::string& s) {
            at(c) = allowed.empty() ? s : OneOf(s, allowed, "value");
          }};
}

template <typename E>
Field Enum(std::string key, std::string type, std::string help, Access<E> at, E (*parse)(const std::string&),
           const char* (*show)(E)) {
  return {std::move(key), std::move(type), std::move(help),
          [at, show](const ExperimentConfig& c) { return std::string(show(at(const_cast<ExperimentConfig&>(c)))); },
          [at, parse](ExperimentConfig& c, const std::string& s) { at(c) = parse(s); }};
}

inline const char* ShowTd(TdMode m) { return m == TdMode::kExact ? "exact" : "sampled"; }
inline TdMode ParseTd(const std::string& s) {
  if (s == "exact") return TdMode::kExact;
  if (s == "sampled") return TdMode::kSampled;
  throw ConfigError("unknown td mode '" + s + "'");
}

}  // namespace detail

// All keys, in manifest order.
inline const std::vector<Field>& Fields() {
  using namespace detail;
  using C = ExperimentConfig;
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(Text("command", "string", "train | contraction | compare | evaluate | sweep",
                     [](C& c) -> std::string& { return c.command; }, Commands()));
    f.push_back(Text("env", "string", "pricing | toy | auction", [](C& c) -> std::string& { return c.env; },
                     {"pricing", "toy", "auction"}));
    f.push_back({"algorithm", "list", "comma-separated: " + JoinList(Algorithms()),
                 [](const C& c) { return JoinList(c.algorithms); },
                 [](C& c, const std::string& s) {
                   c.algorithms.clear();
                   for (const auto& a : SplitList(s)) c.algorithms.push_back(OneOf(a, Algorithms(), "algorithm"));
                   if (c.algorithms.empty()) throw ConfigError("algorithm list is empty");
                 }});
    f.push_back(Number<int>("replicates", "independent runs; replicate r uses seed + r",
                            [](C& c) -> int& { return c.replicates; }));
    f.push_back(Number<std::uint64_t>("seed", "base seed", [](C& c) -> std::uint64_t& { return c.seed; }));
    f.push_back(Number<int>("threads", "worker threads for replicates", [](C& c) -> int& { return c.threads; }));

    // Environments.
    f.push_back(Number<double>("env.pricing.gamma", "discount", [](C& c) -> double& { return c.pricing.gamma; }));
    f.push_back(Number<double>("env.pricing.d", "demand level", [](C& c) -> double& { return c.pricing.d; }));
    f.push_back(Number<double>("env.pricing.sigma", "demand elasticity", [](C& c) -> double& { return c.pricing.sigma; }));
    f.push_back(Number<double>("env.pricing.c0", "unit production cost", [](C& c) -> double& { return c.pricing.c0; }));
    f.push_back(Number<double>("env.pricing.c1", "quadratic production cost", [](C& c) -> double& { return c.pricing.c1; }));
    f.push_back(Number<double>("env.pricing.c2", "unit restocking cost", [](C& c) -> double& { return c.pricing.c2; }));
    f.push_back(Number<double>("env.pricing.c3", "shortage penalty", [](C& c) -> double& { return c.pricing.c3; }));
    f.push_back(Number<double>("env.pricing.c4", "holding cost", [](C& c) -> double& { return c.pricing.c4; }));
    f.push_back(Number<int>("env.pricing.s_max", "largest inventory", [](C& c) -> int& { return c.pricing.s_max; }));
    f.push_back(Number<int>("env.pricing.q_min", "smallest production", [](C& c) -> int& { return c.pricing.q_min; }));
    f.push_back(Number<int>("env.pricing.q_max", "largest production", [](C& c) -> int& { return c.pricing.q_max; }));
    f.push_back(Number<int>("env.pricing.h_min", "smallest restock", [](C& c) -> int& { return c.pricing.h_min; }));
    f.push_back(Number<int>("env.pricing.h_max", "largest restock", [](C& c) -> int& { return c.pricing.h_max; }));
    f.push_back(Number<double>("env.pricing.q_floor", "floor on mean production in the price",
                               [](C& c) -> double& { return c.pricing.q_floor; }));
    f.push_back(Number<double>("env.toy.p", "equilibrium mass of state 1", [](C& c) -> double& { return c.toy.p; }));
    f.push_back(Number<double>("env.toy.gamma", "discount", [](C& c) -> double& { return c.toy.gamma; }));
    f.push_back(Number<double>("env.auction.gamma", "discount", [](C& c) -> double& { return c.auction.gamma; }));
    f.push_back(Number<int>("env.auction.s_max", "largest budget", [](C& c) -> int& { return c.auction.s_max; }));
    f.push_back(Number<int>("env.auction.a_max", "largest bid", [](C& c) -> int& { return c.auction.a_max; }));
    f.push_back(Number<int>("env.auction.M", "bidders per auction", [](C& c) -> int& { return c.auction.M; }));
    f.push_back(Number<double>("env.auction.rho", "overspending penalty", [](C& c) -> double& { return c.auction.rho; }));
    f.push_back(Number<int>("env.auction.v_max", "largest valuation; -1 means a_max",
                            [](C& c) -> int& { return c.auction.v_max; }));

    // Outer loop.
    f.push_back(Number<int>("loop.outer_iterations", "K", [](C& c) -> int& { return c.loop.outer_iterations; }));
    f.push_back(Text("loop.inner", "string", "auto | exact_vi | q_sync | q_async | trpo | exact_policy",
                     [](C& c) -> std::string& { return c.inner; },
                     {"auto", "exact_vi", "q_sync", "q_async", "trpo", "exact_policy"}));
    f.push_back(Number<long>("loop.inner_samples", "inner samples per iteration; 0 means 100|S||A|",
                             [](C& c) -> long& { return c.loop.inner_samples; }));
    f.push_back(Number<long>("loop.td_samples", "TD samples per iteration; 0 means 100|S||A|",
                             [](C& c) -> long& { return c.loop.td_samples; }));
    f.push_back(Number<double>("loop.budget_growth", "T_k = T (k+1)^growth",
                               [](C& c) -> double& { return c.loop.budget_growth; }));
    f.push_back(Enum<StepSchedule::Kind>("loop.schedule", "string", "constant | polynomial",
                                         [](C& c) -> StepSchedule::Kind& { return c.loop.schedule.kind; },
                                         ParseScheduleKind, ToString));
    f.push_back(Number<double>("loop.schedule.h", "polynomial exponent, in (1/2, 1)",
                               [](C& c) -> double& { return c.loop.schedule.h; }));
    f.push_back(Number<double>("loop.schedule.eta", "constant step, in (0, 1]",
                               [](C& c) -> double& { return c.loop.schedule.eta; }));
    f.push_back(Number<double>("loop.q_init", "initial Q value", [](C& c) -> double& { return c.loop.q_init; }));
    f.push_back(Number<double>("loop.async.epsilon", "exploration rate of asynchronous Q-learning",
                               [](C& c) -> double& { return c.loop.async.epsilon; }));
    f.push_back(Number<double>("loop.async.restart_prob", "per-step restart probability",
                               [](C& c) -> double& { return c.loop.async.restart_prob; }));
    f.push_back(Number<int>("loop.trpo.episodes", "policy updates per iteration",
                            [](C& c) -> int& { return c.loop.trpo.episodes; }));
    f.push_back(Number<int>("loop.trpo.trajectories", "rollouts per update",
                            [](C& c) -> int& { return c.loop.trpo.trajectories; }));
    f.push_back(Enum<Bregman>("loop.trpo.bregman", "string", "kl | euclidean",
                              [](C& c) -> Bregman& { return c.loop.trpo.bregman; }, ParseBregman, ToString));
    f.push_back(Number<double>("loop.trpo.step_scale", "step constant; <= 0 means r_max",
                               [](C& c) -> double& { return c.loop.trpo.step_scale; }));
    f.push_back(Number<double>("loop.trpo.rollout_tol", "truncation tolerance",
                               [](C& c) -> double& { return c.loop.trpo.rollout_tol; }));
    f.push_back(Number<int>("loop.trpo.eval_every", "TD certification period",
                            [](C& c) -> int& { return c.loop.trpo.eval_every; }));
    f.push_back(Enum<TdMode>("loop.td", "string", "sampled | exact", [](C& c) -> TdMode& { return c.loop.td; },
                             ParseTd, ShowTd));
    f.push_back(Enum<SmoothingKind>("loop.smoothing", "string", "argmax_e | softmax_c | softmax_h",
                                    [](C& c) -> SmoothingKind& { return c.loop.smoothing.kind; },
                                    ParseSmoothingKind, ToString));
    f.push_back(Number<double>("loop.smoothing.c", "softmax Lipschitz constant",
                               [](C& c) -> double& { return c.loop.smoothing.c; }));
    f.push_back(Number<double>("loop.smoothing.c_prime", "lower slope of h; <= 0 means c",
                               [](C& c) -> double& { return c.loop.smoothing.c_prime; }));
    f.push_back(Flag("loop.project", "project onto the decimal grid", [](C& c) -> bool& { return c.loop.project; }));
    f.push_back(Number<int>("loop.eps_net.digits", "decimal digits of the grid",
                            [](C& c) -> int& { return c.loop.eps_net.digits; }));
    f.push_back(Number<int>("loop.weak_population", "N of the weak simulator; 0 means nplayer.players",
                            [](C& c) -> int& { return c.loop.weak_population; }));
    f.push_back(Text("loop.initial", "string", "uniform | random", [](C& c) -> std::string& { return c.initial; },
                     {"uniform", "random"}));
    f.push_back(Flag("loop.track_exploitability", "record C_MF per iteration",
                     [](C& c) -> bool& { return c.loop.track_exploitability; }));
    f.push_back(Number<double>("loop.vi_tol", "value-iteration tolerance", [](C& c) -> double& { return c.loop.vi_tol; }));

    // Metrics.
    f.push_back(Number<double>("metrics.eps0", "denominator safeguard", [](C& c) -> double& { return c.loop.metrics.eps0; }));
    f.push_back(Enum<BestResponseMethod>("metrics.br_method", "string", "exact_vi | learned",
                                         [](C& c) -> BestResponseMethod& { return c.loop.metrics.br_method; },
                                         ParseBestResponseMethod, ToString));
    f.push_back(Number<long>("metrics.br_sweeps", "sweeps of the learned mean-field best response",
                             [](C& c) -> long& { return c.loop.metrics.br_sweeps; }));
    f.push_back(Number<int>("metrics.mc_profiles", "initial profiles for C(pi)",
                            [](C& c) -> int& { return c.loop.metrics.mc_profiles; }));
    f.push_back(Number<long>("metrics.br_steps", "joint steps per N-player best response",
                             [](C& c) -> long& { return c.loop.metrics.br_steps; }));
    f.push_back(Number<int>("metrics.br_players", "players scored per estimate; 0 means all",
                            [](C& c) -> int& { return c.loop.metrics.br_players; }));
    f.push_back(Number<int>("metrics.rollouts", "rollouts per value estimate",
                            [](C& c) -> int& { return c.loop.metrics.rollouts; }));
    f.push_back(Number<double>("metrics.rollout_tol", "rollout truncation tolerance",
                               [](C& c) -> double& { return c.loop.metrics.rollout_tol; }));

    // N-player game and baselines.
    f.push_back(Number<int>("nplayer.players", "N of the N-player game", [](C& c) -> int& { return c.players; }));
    f.push_back(Number<int>("baseline.rounds", "training rounds", [](C& c) -> int& { return c.baseline.rounds; }));
    f.push_back(Number<long>("baseline.steps_per_round", "joint steps per round; 0 means ceil(100|S||A|/N)",
                             [](C& c) -> long& { return c.baseline.steps_per_round; }));
    f.push_back(Number<double>("baseline.schedule.h", "polynomial step exponent",
                               [](C& c) -> double& { return c.baseline.schedule.h; }));
    f.push_back(Number<double>("baseline.eps_start", "initial exploration rate",
                               [](C& c) -> double& { return c.baseline.eps_start; }));
    f.push_back(Number<double>("baseline.eps_end", "final exploration rate",
                               [](C& c) -> double& { return c.baseline.eps_end; }));
    f.push_back(Number<double>("baseline.q_init", "initial Q value", [](C& c) -> double& { return c.baseline.q_init; }));
    f.push_back(Number<int>("baseline.bins", "mean-action bins of mfq", [](C& c) -> int& { return c.baseline.bins; }));

    // Commands.
    f.push_back(Number<int>("contraction.pairs", "random pairs per replicate", [](C& c) -> int& { return c.pairs; }));
    f.push_back(Number<int>("eval.every", "N-player evaluation period; 0 means final iteration only",
                            [](C& c) -> int& { return c.eval_every; }));
    f.push_back(Text("sweep.key", "string", "key varied by the sweep command",
                     [](C& c) -> std::string& { return c.sweep_key; }));
    f.push_back({"sweep.values", "list", "comma-separated values of sweep.key",
                 [](const C& c) { return JoinList(c.sweep_values); },
                 [](C& c, const std::string& s) { c.sweep_values = SplitList(s); }});
    return f;
  }();
  return fields;
}

inline const Field* FindField(const std::string& key) {
  for (const auto& f : Fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

inline void SetField(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = FindField(key);
  if (f == nullptr) throw ConfigError("unknown key '" + key + "'");
  f->set(cfg, value);
}

// The resolved configuration as a config file that reproduces the run.
inline std::string Serialize(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& f : Fields()) out << f.key << " = " << f.get(cfg) << "\n";
  return out.str();
}

inline InnerSolver ResolvedInner(const ExperimentConfig& cfg, const std::string& alg) {
  if (cfg.inner != "auto") return ParseInnerSolver(cfg.inner);
  return alg == "gmf_p" || alg == "gmf_pw" ? InnerSolver::kTrpo : InnerSolver::kQSync;
}

inline std::unique_ptr<Model> MakeModel(const ExperimentConfig& cfg) {
  if (cfg.env == "pricing") return std::make_unique<PricingModel>(cfg.pricing);
  if (cfg.env == "toy") return std::make_unique<ToyModel>(cfg.toy);
  if (cfg.env == "auction") return std::make_unique<AuctionModel>(cfg.auction);
  throw ConfigError("unknown env '" + cfg.env + "'");
}

inline bool NeedsNPlayer(const ExperimentConfig& cfg) {
  if (cfg.command == "compare") return true;
  for (const auto& a : cfg.algorithms) {
    if (IsBaseline(a)) return true;
  }
  return false;
}

// Cross-field checks; everything that can be rejected before running is.
inline void Validate(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (cfg.pairs < 1) throw ConfigError("contraction.pairs must be >= 1");
  if (cfg.eval_every < 0) throw ConfigError("eval.every must be >= 0");
  if (cfg.players < 0) throw ConfigError("nplayer.players must be >= 0");
  const auto model = MakeModel(cfg);
  cfg.loop.Validate();
  cfg.loop.metrics.Validate();
  cfg.baseline.Validate();
  if (cfg.command != "contraction" && cfg.command != "sweep" && cfg.command != "compare" &&
      cfg.algorithms.size() != 1) {
    throw ConfigError(cfg.command + " runs exactly one algorithm");
  }
  for (const auto& alg : cfg.algorithms) {
    if (!IsBaseline(alg)) {
      const InnerSolver inner = ResolvedInner(cfg, alg);
      const bool policy = IsPolicyBased(inner);
      if ((alg == "gmf_p" || alg == "gmf_pw") && !policy) throw ConfigError(alg + " needs a policy-based inner solver");
      if ((alg == "gmf_v" || alg == "gmf_vw" || alg == "gmf_naive") && policy) {
        throw ConfigError(alg + " needs a value-based inner solver");
      }
      if (inner == InnerSolver::kTrpo) cfg.loop.trpo.Validate(model->num_states());
    }
    if (IsWeak(alg) && cfg.loop.weak_population < 1 && cfg.players < 1) {
      throw ConfigError(alg + " needs loop.weak_population or nplayer.players");
    }
    if (IsBaseline(alg) && alg == "mfq" && cfg.baseline.bins < 2) {
      throw ConfigError("baseline.bins must be >= 2 for mfq");
    }
  }
  if (NeedsNPlayer(cfg) || cfg.players > 0) {
    if (cfg.env != "pricing") throw ConfigError("the N-player game is only defined for env = pricing");
    if (cfg.players < 1) throw ConfigError("nplayer.players must be >= 1 for N-player runs");
  }
  if (cfg.command == "sweep") {
    if (cfg.sweep_key.empty() || cfg.sweep_values.empty()) throw ConfigError("sweep needs sweep.key and sweep.values");
    if (FindField(cfg.sweep_key) == nullptr) throw ConfigError("sweep.key: unknown key '" + cfg.sweep_key + "'");
    if (cfg.sweep_key == "command" || cfg.sweep_key.rfind("sweep.", 0) == 0) {
      throw ConfigError("sweep.key cannot be '" + cfg.sweep_key + "'");
    }
    for (const auto& v : cfg.sweep_values) {
      ExperimentConfig point = cfg;
      SetField(point, cfg.sweep_key, v);
      point.command = "train";
      Validate(point);
    }
  }
}

// Reads a config file; errors carry the offending line number.
inline ExperimentConfig FromFile(const ConfigFile& file) {
  ExperimentConfig cfg;
  for (const auto& key : file.keys()) {
    const auto& e = file.at(key);
    const Field* f = FindField(key);
    if (f == nullptr) file.Fail(e.line, "unknown key '" + key + "'");
    try {
      f->set(cfg, e.value);
    } catch (const ConfigError& err) {
      file.Fail(e.line, key + ": " + err.what());
    }
  }
  try {
    Validate(cfg);
  } catch (const ConfigError& err) {
    file.Fail(0, err.what());
  }
  return cfg;
}

}  // namespace gmfg::cli
