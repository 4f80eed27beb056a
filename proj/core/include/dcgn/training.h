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

#ifndef DCGN_TRAINING_H_
#define DCGN_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcgn/data_io.h"
#include "dcgn/metrics.h"
#include "dcgn/model.h"
#include "dcgn/shots.h"

namespace dcgn {

enum class OptimizerKind { kAdam, kSgd };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

// Optimization schedule plus the model it trains. Defaults are desk scale;
// the original full-scale schedule used batch 1024, 4M decay examples and
// filter size 1024.
struct TrainConfig {
  double base_lr = 0.001;
  double lr_decay = 0.8;
  std::size_t lr_decay_examples = 4000;
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t top_n = kDefaultTopN;
  std::uint64_t seed = 1;  // shuffling; model init uses model.seed
  ModelConfig model;

  void validate() const;
};

// base_lr · lr_decay^⌊step_examples / lr_decay_examples⌋.
double lr_schedule(std::size_t step_examples, const TrainConfig& cfg);

struct Example {
  std::string id;
  Tensor frames;
  ShotBoundaries shots;
  std::vector<int> labels;
};

// Segments `frames` into model.shots_m shots (DCGN models only).
Example make_example(std::string id, Tensor frames, std::vector<int> labels,
                     const ModelConfig& model);

std::vector<Example> load_examples(const Manifest& manifest, const ModelConfig& model,
                                   std::size_t threads);

// Fills feature_dim and shot_kmax (⌈median frame count / shots_m⌉) from the
// training examples when they are unset.
ModelConfig resolve_model_config(ModelConfig model, std::span<const Example> train);

struct OptimizerState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t steps = 0;

  static OptimizerState For(const DcgnModel& model);
};

// Mean loss of one example's prediction and its gradient w.r.t. parameters.
double example_loss_and_grads(const DcgnModel& model, const Example& example, double scale,
                              ModelGrads* grads);

// Forward/backward over the batch (examples in parallel, gradients reduced in
// batch order), then one optimizer update with learning rate `lr`. Returns the
// mean loss before the update. Throws NonFiniteError on a NaN/Inf loss.
double train_step(DcgnModel& model, OptimizerState& state, std::span<const Example* const> batch,
                  double lr, const TrainConfig& cfg, std::size_t threads = 1);

struct EvalReport {
  double gap = 0.0;
  double hit_at_1 = 0.0;
  double loss = 0.0;
  std::size_t examples = 0;
};

EvalReport evaluate(const DcgnModel& model, std::span<const Example> examples,
                    std::size_t top_n = kDefaultTopN, std::size_t threads = 1);

struct EpochReport {
  std::size_t epoch = 0;
  std::size_t examples_seen = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  EvalReport validation;
};

// One JSON object per line, with the GAP variant tag.
std::string to_json_line(const EpochReport& report);
std::string to_json(const EvalReport& report);

struct TrainOptions {
  std::size_t threads = 1;
  // When set: checkpoint_epoch_<e>.dcgm per epoch, model.dcgm at the end and
  // run_log.jsonl with one report per epoch are written here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochReport&)> on_epoch;
};

struct TrainResult {
  DcgnModel model;
  TrainConfig config;  // with the model config resolved
  std::vector<EpochReport> reports;
};

// Deterministic for a fixed config and data. With epochs = 0 the initialized
// model is evaluated once (epoch 0).
TrainResult run_training(const TrainConfig& cfg, std::span<const Example> train,
                         std::span<const Example> validation, const TrainOptions& options = {});

}  // namespace dcgn

#endif  // DCGN_TRAINING_H_
