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


// gmfg <command> --config <path> [--seed <u64>] [--out <dir>] [--replicates <n>] [--threads <n>]
//
// Exit status: 0 on success, 1 when a replicate fails at run time, 2 for an
// invalid command line or configuration.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gmfg/cli/config_file.hpp"
#include "gmfg/cli/experiment.hpp"
#include "gmfg/cli/harness.hpp"
#include "gmfg/version.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<int> threads;
  std::string out = "gmfg_out";
};

std::string EscapeCell(std::string s) {
  for (std::size_t i = s.find('|'); i != std::string::npos; i = s.find('|', i + 2)) s.replace(i, 1, "\\|");
  return s;
}

// Reals are shown at 15 significant digits for readability.
std::string DisplayDefault(const gmfg::cli::Field& f, const gmfg::cli::ExperimentConfig& defaults) {
  const std::string raw = f.get(defaults);
  if (f.type != "real") return raw;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", std::stod(raw));
  return buf;
}

void PrintSchema() {
  const gmfg::cli::ExperimentConfig defaults;
  std::cout << "| key | type | default | meaning |\n|---|---|---|---|\n";
  for (const auto& f : gmfg::cli::Fields()) {
    std::cout << "| `" << f.key << "` | " << f.type << " | `" << DisplayDefault(f, defaults) << "` | " << EscapeCell(f.help) << " |\n";
  }
}

int RunCommand(const std::string& command, const Options& opt) {
  using gmfg::cli::ConfigFile;
  gmfg::cli::ExperimentConfig cfg;
  try {
    ConfigFile file = ConfigFile::Load(opt.config);
    file.Set("command", command);
    if (opt.seed) file.Set("seed", std::to_string(*opt.seed));
    if (opt.replicates) file.Set("replicates", std::to_string(*opt.replicates));
    if (opt.threads) file.Set("threads", std::to_string(*opt.threads));
    cfg = gmfg::cli::FromFile(file);
  } catch (const gmfg::ConfigError& e) {
    std::cerr << "gmfg: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto summary = gmfg::cli::Run(cfg, opt.out);
    std::cout << command << ": wrote " << summary.size() << " summary rows to " << opt.out << "\n";
  } catch (const gmfg::ConfigError& e) {
    std::cerr << "gmfg: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gmfg: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning stationary equilibria of general mean-field games"};
  app.set_version_flag("--version", GMFG_VERSION);
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  for (const std::string& name : gmfg::cli::Commands()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " command");
    sub->add_option("--config", opt.config, "configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "base seed (overrides the file)");
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--replicates", opt.replicates, "replicate count (overrides the file)")->check(CLI::PositiveNumber);
    sub->add_option("--threads", opt.threads, "worker threads (overrides the file)")->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }
  app.add_subcommand("schema", "print every configuration key as a markdown table")->callback([&chosen] {
    chosen = "schema";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (chosen == "schema") {
    PrintSchema();
    return 0;
  }
  return RunCommand(chosen, opt);
}
