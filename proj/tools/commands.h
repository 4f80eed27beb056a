// Copyright 2026 The DCGN Authors.
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

#ifndef DCGN_TOOLS_COMMANDS_H_
#define DCGN_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace dcgn::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,      // gradient check failed
  kConfigError = 2,  // bad config, flags or parameters; undefined metric
  kIoError = 3,
  kFormatError = 4,  // malformed feature file
  kNonFiniteLoss = 5,
  kCheckpointMismatch = 6,  // checkpoint does not fit config or data
};

struct SynthArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::size_t count = 0;
  std::size_t first_index = 0;
  std::string manifest_name = "manifest.jsonl";
};

struct SegmentArgs {
  std::filesystem::path features;
  std::optional<std::size_t> m;
  bool automatic = false;
  std::optional<double> c_penalty;
  std::optional<std::size_t> m_max;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> dump_similarity;
};

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path train_manifest;
  std::filesystem::path val_manifest;
  std::filesystem::path out_dir;
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  // Defaults to resolved_config.json next to the checkpoint.
  std::optional<std::filesystem::path> config;
};

struct GradcheckArgs {
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 1;
  // Test fixture: perturbs the analytic gradient of the named tensor.
  std::optional<std::string> corrupt;
};

// Each command writes machine-readable JSON to `out` and diagnostics to `err`.
int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_segment(const SegmentArgs& args, std::ostream& out, std::ostream& err);
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err);

}  // namespace dcgn::cli

#endif  // DCGN_TOOLS_COMMANDS_H_
