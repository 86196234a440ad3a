// Copyright 2026  sdpn-desk contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SDPN_CLI_COMMANDS_H_
#define SDPN_CLI_COMMANDS_H_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "sdpn/dataio/synth_corpus.h"
#include "sdpn/eval/metrics.h"
#include "sdpn/train/config.h"

namespace sdpn::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

struct TrialConfig {
  int n_target = 500;
  int n_nontarget = 500;
};

/// Everything a command may need. Loaded from a JSON file whose sections
/// are all optional:
///   {"preset": "desk" | "full", "corpus": {...}, "trials": {...},
///    "dcf": {...}, "train": {<partial training config>}}
struct RunConfig {
  std::string preset = "desk";
  dataio::SynthCorpusConfig corpus;
  TrialConfig trials;
  eval::DcfParams dcf;
  train::TrainConfig train = train::DeskConfig();
};

RunConfig LoadRunConfig(const std::filesystem::path &path);
RunConfig RunConfigFromJson(const std::string &json);
std::string RunConfigToJson(const RunConfig &config);
void ValidateRunConfig(const RunConfig &config);

/// Entry point shared by the `sdpn` binary and the tests. `args` excludes
/// the program name. Returns an ExitCode.
int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace sdpn::cli

#endif  // SDPN_CLI_COMMANDS_H_
