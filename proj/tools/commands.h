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

#ifndef FSBSED_TOOLS_COMMANDS_H_
#define FSBSED_TOOLS_COMMANDS_H_

#include <string>

#include "fsbsed/config.h"

namespace fsbsed::cli {

struct FeaturesArgs {
  std::string input;
  std::string output;
  std::string format = "bin";
};

struct EvalArgs {
  std::string predictions;
};

struct ReportArgs {
  std::string input;
};

struct SweepArgs {
  std::string plan;
  std::string output_dir;  // overrides the plan's when set
};

int RunTrain(const experiment::Settings& s);
int RunInfer(experiment::Settings s);
int RunEval(const experiment::Settings& s, const EvalArgs& args);
int RunFeatures(const experiment::Settings& s, const FeaturesArgs& args);
int RunReport(const experiment::Settings& s, const ReportArgs& args);
int RunSweep(const experiment::Settings& s, const SweepArgs& args);

}  // namespace fsbsed::cli

#endif  // FSBSED_TOOLS_COMMANDS_H_
