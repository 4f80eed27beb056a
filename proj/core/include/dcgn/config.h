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

#ifndef DCGN_CONFIG_H_
#define DCGN_CONFIG_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "dcgn/errors.h"
#include "dcgn/synth.h"
#include "dcgn/training.h"

namespace dcgn {

// A config value is missing, mistyped, unknown or out of range. `field` is
// the dotted key path, e.g. "synth.dim".
class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : ParameterError(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SegmentSettings {
  std::size_t m = 16;      // shot count for fixed-m segmentation
  double c_penalty = 1.0;  // weight of m (ln(n/m) + 1) in automatic mode
  std::size_t m_max = 0;   // automatic mode searches [1, m_max]; 0 means n
};

// Everything a command can be configured with. JSON layout:
//   {"model": {...}, "train": {...}, "synth": {...}, "segment": {...},
//    "metrics": {...}}
// Unknown keys are rejected.
struct RunConfig {
  TrainConfig train;
  SynthSpec synth;
  SegmentSettings segment;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);

// Every setting with its effective value, including the fixed modelling
// choices (gating, initialization, log base, ...).
std::string resolved_config_json(const RunConfig& config);

}  // namespace dcgn

#endif  // DCGN_CONFIG_H_
