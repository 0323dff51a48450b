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


// Command runners. Replicates run on a worker pool; their rows are buffered
// and written by the calling thread in replicate order, so output files do
// not depend on the thread count.
//
// metrics.csv   replicate,k,metric,value            (train, evaluate, contraction)
// compare.csv   algorithm,replicate,k,metric,value  (compare)
// summary.csv   [algorithm,]k,metric,n,mean,ci_low,ci_high
// ratios.csv    replicate,pair,ratio                 (contraction)
// sweep.csv     point,value,k,metric,n,mean,ci_low,ci_high (sweep; one directory per point)
// manifest.cfg  the resolved configuration; rerunning it reproduces the files

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "gmfg/analysis.hpp"
#include "gmfg/baselines.hpp"
#include "gmfg/cli/experiment.hpp"
#include "gmfg/loops.hpp"
#include "gmfg/metrics.hpp"
#include "gmfg/parallel.hpp"
#include "gmfg/version.hpp"

namespace gmfg::cli {

// A replicate failed at run time.
class RunFailure : public Error {
 public:
  RunFailure(int replicate, std::uint64_t seed, const std::string& what)
      : Error("replicate " + std::to_string(replicate) + " (seed " + std::to_string(seed) + ") failed: " + what),
        replicate_(replicate), seed_(seed) {}
  int replicate() const { return replicate_; }
  std::uint64_t seed() const { return seed_; }

 private:
  int replicate_;
  std::uint64_t seed_;
};

struct Row {
  std::string algorithm;
  int replicate = 0;
  int k = 0;
  std::string metric;
  double value = 0.0;
};

struct SummaryRow {
  std::string algorithm;
  int k = 0;
  std::string metric;
  int n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline constexpr double kCiZ = 1.645;

inline std::uint64_t ReplicateSeed(const ExperimentConfig& cfg, int r) { return cfg.seed + static_cast<std::uint64_t>(r); }

// mean +- 1.645 sd / sqrt(n) per (algorithm, k, metric), in first-seen order.
inline std::vector<SummaryRow> Summarize(const std::vector<Row>& rows) {
  using Key = std::tuple<std::string, int, std::string>;
  std::map<Key, std::vector<double>> groups;
  std::vector<Key> order;
  for (const Row& r : rows) {
    Key key{r.algorithm, r.k, r.metric};
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(r.value);
  }
  std::stable_sort(order.begin(), order.end(), [](const Key& a, const Key& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::vector<SummaryRow> out;
  for (const Key& key : order) {
    const auto& v = groups[key];
    const int n = static_cast<int>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    const double half = kCiZ * sd / std::sqrt(static_cast<double>(n));
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), n, mean, mean - half, mean + half});
  }
  return out;
}

namespace detail {

inline std::vector<int> EvaluationPoints(int iterations, int every) {
  std::vector<int> ks;
  if (iterations < 1) return ks;
  if (every > 0) {
    for (int k = every - 1; k < iterations - 1; k += every) ks.push_back(k);
  }
  ks.push_back(iterations - 1);
  return ks;
}

inline void AddNPlayer(std::vector<Row>& rows, const std::string& alg, int r, int k, const NExploitability& e) {
  rows.push_back({alg, r, k, "exploitability_n", e.value});
  rows.push_back({alg, r, k, "exploitability_n_se", e.std_error});
  rows.push_back({alg, r, k, "exploitability_n_wide_ci", e.wide_ci ? 1.0 : 0.0});
}

inline RunRecord RunGmf(const Model& model, const ExperimentConfig& cfg, const std::string& alg, const Rng& rng) {
  LoopConfig lc = cfg.loop;
  lc.inner = ResolvedInner(cfg, alg);
  if (cfg.initial == "random") {
    Rng init = rng.Stream("initial");
    lc.initial = MeanField::RandomUniform(model.num_states(), model.num_actions(), init);
  }
  if (model.transition_depends_on_population()) lc.track_exploitability = false;
  if (IsWeak(alg) && lc.weak_population < 1) lc.weak_population = cfg.players;
  if (alg == "gmf_v") return GmfV(model, lc, rng);
  if (alg == "gmf_p") return GmfP(model, lc, rng);
  if (alg == "gmf_naive") return GmfNaive(model, lc, rng);
  return GmfWeak(model, lc, rng);
}

// Rows of one replicate of one algorithm. `full` keeps every iteration's
// loop metrics; otherwise only the last iteration's are kept.
inline std::vector<Row> RunAlgorithm(const ExperimentConfig& cfg, const std::string& alg, int r, bool full,
                                     bool loop_metrics) {
  const Rng rng(ReplicateSeed(cfg, r));
  const auto model = MakeModel(cfg);
  std::optional<NPlayerPricing> game;
  if (cfg.players > 0) game.emplace(cfg.pricing, cfg.players);
  std::vector<Row> rows;

  if (IsBaseline(alg)) {
    const auto ks = EvaluationPoints(cfg.baseline.rounds, cfg.eval_every);
    auto on_round = [&](int k, const NPlayerPolicyProfile& prof) {
      if (std::find(ks.begin(), ks.end(), k) == ks.end()) return;
      AddNPlayer(rows, alg, r, k, ExploitabilityN(*game, prof, cfg.loop.metrics, rng.Stream("nplayer").Stream(k)));
    };
    if (alg == "il") {
      IlTrain(*game, cfg.baseline, rng, on_round);
    } else {
      MfqTrain(*game, cfg.baseline, rng, on_round);
    }
    return rows;
  }

  const RunRecord rec = RunGmf(*model, cfg, alg, rng);
  const int K = static_cast<int>(rec.iterations.size());
  if (loop_metrics) {
    for (const IterationRecord& it : rec.iterations) {
      if (!full && it.k != K - 1) continue;
      rows.push_back({alg, r, it.k, "step_l1", it.step_l1});
      if (std::isfinite(it.exploitability)) rows.push_back({alg, r, it.k, "exploitability_mf", it.exploitability});
      if (std::isfinite(it.min_action_gap)) rows.push_back({alg, r, it.k, "min_action_gap", it.min_action_gap});
      for (const auto& [name, value] : it.summaries) rows.push_back({alg, r, it.k, name, value});
    }
    const bool tracked = K > 0 && std::isfinite(rec.iterations.back().exploitability);
    if (!full && K > 0 && !tracked && !model->transition_depends_on_population()) {
      rows.push_back({alg, r, K - 1, "exploitability_mf", ExploitabilityMf(*model, rec.final_policy(), cfg.loop.metrics)});
    }
  }
  if (game) {
    for (int k : EvaluationPoints(K, cfg.eval_every)) {
      const auto prof = NPlayerPolicyProfile::Symmetric(cfg.players, rec.iterations[k].policy);
      AddNPlayer(rows, alg, r, k, ExploitabilityN(*game, prof, cfg.loop.metrics, rng.Stream("nplayer").Stream(k)));
    }
  }
  return rows;
}

// Runs fn(r) for every replicate; rethrows the lowest failing replicate.
template <typename Fn>
auto ForReplicates(const ExperimentConfig& cfg, Fn&& fn) {
  using T = decltype(fn(0));
  std::vector<T> out(cfg.replicates);
  std::vector<std::string> errors(cfg.replicates);
  ParallelFor(cfg.replicates, cfg.threads, [&](long r) {
    try {
      out[r] = fn(static_cast<int>(r));
    } catch (const std::exception& e) {
      errors[r] = e.what()[0] ? e.what() : "unknown error";
    }
  });
  for (int r = 0; r < cfg.replicates; ++r) {
    if (!errors[r].empty()) throw RunFailure(r, ReplicateSeed(cfg, r), errors[r]);
  }
  return out;
}

inline std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

inline void WriteManifest(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
  auto out = OpenOut(dir / "manifest.cfg");
  out << "# gmfg " << GMFG_VERSION << "\n";
  out << "# replicate seeds: seed + r for r in [0, " << cfg.replicates << ")\n";
  out << Serialize(cfg);
}

inline void WriteRows(const std::filesystem::path& path, const std::vector<Row>& rows, bool with_algorithm) {
  auto out = OpenOut(path);
  out << (with_algorithm ? "algorithm," : "") << "replicate,k,metric,value\n";
  for (const Row& r : rows) {
    if (with_algorithm) out << r.algorithm << ",";
    out << r.replicate << "," << r.k << "," << r.metric << "," << FormatDouble(r.value) << "\n";
  }
}

inline void WriteSummary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows, bool with_algorithm) {
  auto out = OpenOut(path);
  out << (with_algorithm ? "algorithm," : "") << "k,metric,n,mean,ci_low,ci_high\n";
  for (const SummaryRow& s : rows) {
    if (with_algorithm) out << s.algorithm << ",";
    out << s.k << "," << s.metric << "," << s.n << "," << FormatDouble(s.mean) << "," << FormatDouble(s.ci_low) << ","
        << FormatDouble(s.ci_high) << "\n";
  }
}

template <typename Vec>
Vec Flatten(const std::vector<Vec>& parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace detail

// train / evaluate: one algorithm, per-replicate rows.
inline std::vector<SummaryRow> RunTrainOrEvaluate(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const bool full = cfg.command != "evaluate";
  const std::string alg = cfg.algorithms.front();
  const auto rows = detail::Flatten(
      detail::ForReplicates(cfg, [&](int r) { return detail::RunAlgorithm(cfg, alg, r, full, true); }));
  const auto summary = Summarize(rows);
  detail::WriteRows(dir / "metrics.csv", rows, false);
  detail::WriteSummary(dir / "summary.csv", summary, false);
  detail::WriteManifest(dir, cfg);
  return summary;
}

inline std::vector<SummaryRow> RunCompare(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::vector<Row> rows;
  for (const auto& alg : cfg.algorithms) {
    const auto part = detail::Flatten(
        detail::ForReplicates(cfg, [&](int r) { return detail::RunAlgorithm(cfg, alg, r, false, false); }));
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto summary = Summarize(rows);
  detail::WriteRows(dir / "compare.csv", rows, true);
  detail::WriteSummary(dir / "summary.csv", summary, true);
  detail::WriteManifest(dir, cfg);
  return summary;
}

inline std::vector<SummaryRow> RunContraction(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  const auto reports = detail::ForReplicates(cfg, [&](int r) {
    const auto model = MakeModel(cfg);
    return Contraction(*model, cfg.pairs, Rng(ReplicateSeed(cfg, r)));
  });
  std::vector<Row> rows;
  auto ratios = detail::OpenOut(dir / "ratios.csv");
  ratios << "replicate,pair,ratio\n";
  for (int r = 0; r < cfg.replicates; ++r) {
    const auto& rep = reports[r];
    for (std::size_t j = 0; j < rep.ratios.size(); ++j) ratios << r << "," << j << "," << FormatDouble(rep.ratios[j]) << "\n";
    rows.push_back({"", r, 0, "ratio_max", rep.max});
    rows.push_back({"", r, 0, "ratio_mean", rep.mean});
    rows.push_back({"", r, 0, "pairs_excluded", static_cast<double>(rep.excluded)});
  }
  const auto summary = Summarize(rows);
  detail::WriteRows(dir / "metrics.csv", rows, false);
  detail::WriteSummary(dir / "summary.csv", summary, false);
  detail::WriteManifest(dir, cfg);
  return summary;
}

inline std::vector<SummaryRow> Run(const ExperimentConfig& cfg, const std::filesystem::path& dir);

inline std::vector<SummaryRow> RunSweep(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  auto out = detail::OpenOut(dir / "sweep.csv");
  out << "point,value,k,metric,n,mean,ci_low,ci_high\n";
  std::vector<SummaryRow> all;
  for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
    ExperimentConfig point = cfg;
    SetField(point, cfg.sweep_key, cfg.sweep_values[i]);
    point.command = "train";
    point.sweep_key.clear();
    point.sweep_values.clear();
    const auto summary = Run(point, dir / ("point_" + std::to_string(i)));
    for (const SummaryRow& s : summary) {
      out << i << "," << cfg.sweep_values[i] << "," << s.k << "," << s.metric << "," << s.n << ","
          << FormatDouble(s.mean) << "," << FormatDouble(s.ci_low) << "," << FormatDouble(s.ci_high) << "\n";
    }
    all.insert(all.end(), summary.begin(), summary.end());
  }
  detail::WriteManifest(dir, cfg);
  return all;
}

// Validates, creates the output directory and dispatches on cfg.command.
inline std::vector<SummaryRow> Run(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  Validate(cfg);
  std::filesystem::create_directories(dir);
  if (cfg.command == "train" || cfg.command == "evaluate") return RunTrainOrEvaluate(cfg, dir);
  if (cfg.command == "compare") return RunCompare(cfg, dir);
  if (cfg.command == "contraction") return RunContraction(cfg, dir);
  if (cfg.command == "sweep") return RunSweep(cfg, dir);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace gmfg::cli
