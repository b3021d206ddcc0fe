// Copyright (c) 2026 The fsbsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fsbsed: few-shot bioacoustic sound event detection.
//
// Settings resolve as defaults < --config file < --set key=value < flags.
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "commands.h"
#include "fsbsed/config.h"
#include "fsbsed/error.h"

namespace {

using fsbsed::experiment::Settings;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct CommonArgs {
  std::string config;
  std::vector<std::string> set;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> features;
  std::optional<std::string> train_root;
  std::optional<std::string> eval_root;
  std::optional<std::string> output_dir;
  std::optional<std::string> checkpoint;
  bool verbose = false;
  bool quiet = false;
};

void AddCommon(CLI::App* app, CommonArgs& a) {
  app->add_option("-c,--config", a.config, "JSON config file (keys listed below)");
  app->add_option("--set", a.set, "override a config key: --set train.max_epochs=5")
      ->type_name("KEY=VALUE");
  app->add_option("--seed", a.seed, "base seed (key: seed)");
  app->add_option("--threads", a.threads,
                  "worker threads; 1 is fully deterministic (key: threads)");
  app->add_option("--features", a.features, "feature set (key: features.set)");
  app->add_option("--train-root", a.train_root, "training dataset root (key: train_root)");
  app->add_option("--eval-root", a.eval_root, "evaluation dataset root (key: eval_root)");
  app->add_option("-o,--output-dir", a.output_dir, "output directory (key: output_dir)");
  app->add_option("--checkpoint", a.checkpoint, "checkpoint path (key: checkpoint)");
  app->add_flag("-v,--verbose", a.verbose, "debug logging");
  app->add_flag("-q,--quiet", a.quiet, "warnings and errors only");
}

Settings Resolve(const CommonArgs& a) {
  Settings s;
  if (!a.config.empty()) s = fsbsed::experiment::LoadSettingsFile(a.config);
  for (const std::string& kv : a.set) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw fsbsed::UsageError(fmt::format("--set expects KEY=VALUE, got '{}'", kv));
    }
    fsbsed::experiment::ApplyOverride(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  using fsbsed::experiment::ApplyOverride;
  if (a.seed) s.seed = *a.seed;
  if (a.threads) s.threads = *a.threads;
  if (a.features) ApplyOverride(s, "features.set", "\"" + *a.features + "\"");
  if (a.train_root) s.train_root = *a.train_root;
  if (a.eval_root) s.eval_root = *a.eval_root;
  if (a.output_dir) s.output_dir = *a.output_dir;
  if (a.checkpoint) s.checkpoint = *a.checkpoint;
  s.Validate();
  return s;
}

int ExitCodeOf(const fsbsed::Error& e) {
  switch (e.error_class()) {
    case fsbsed::ErrorClass::kUsage:
      return kExitUsage;
    case fsbsed::ErrorClass::kData:
      return kExitData;
    default:
      return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot bioacoustic sound event detection"};
  app.require_subcommand(1);
  const std::string keys = "\nConfig keys (JSON file nests them by the dots):\n" +
                           fsbsed::experiment::FormatKeyHelp();
  app.footer(keys);

  CommonArgs common;
  fsbsed::cli::EvalArgs eval_args;
  fsbsed::cli::FeaturesArgs features_args;
  fsbsed::cli::ReportArgs report_args;
  fsbsed::cli::SweepArgs sweep_args;

  auto* train = app.add_subcommand("train", "episodic training; writes a checkpoint");
  auto* infer = app.add_subcommand("infer", "5-shot detection over an evaluation root");
  auto* eval = app.add_subcommand("eval", "score predictions against annotations");
  auto* features = app.add_subcommand("features", "dump the feature matrix of a wav file");
  auto* report = app.add_subcommand("report", "plot-ready CSVs from sweep or eval output");
  auto* sweep = app.add_subcommand("sweep", "run an experiment plan");
  for (CLI::App* sub : {train, infer, eval, features, report, sweep}) {
    AddCommon(sub, common);
    sub->footer(keys);
  }
  eval->add_option("--predictions", eval_args.predictions,
                   "predictions CSV (default <output_dir>/predictions.csv)");
  features->add_option("-i,--input", features_args.input, "input wav")->required();
  features->add_option("--out", features_args.output, "output file")->required();
  features->add_option("--format", features_args.format, "bin | csv");
  report->add_option("-i,--input", report_args.input,
                     "directory with summary.csv and/or report.csv")
      ->required();
  sweep->add_option("--plan", sweep_args.plan, "experiment plan JSON")->required();
  sweep_args.output_dir.clear();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_level(common.verbose ? spdlog::level::debug
                    : common.quiet ? spdlog::level::warn
                                   : spdlog::level::info);
  try {
    Settings s = Resolve(common);
    if (*train) return fsbsed::cli::RunTrain(s);
    if (*infer) return fsbsed::cli::RunInfer(s);
    if (*eval) return fsbsed::cli::RunEval(s, eval_args);
    if (*features) return fsbsed::cli::RunFeatures(s, features_args);
    if (*report) {
      if (!common.output_dir) s.output_dir.clear();
      return fsbsed::cli::RunReport(s, report_args);
    }
    if (*sweep) {
      if (common.output_dir) sweep_args.output_dir = *common.output_dir;
      return fsbsed::cli::RunSweep(s, sweep_args);
    }
  } catch (const fsbsed::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return ExitCodeOf(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
