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

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.h"

int main(int argc, char** argv) {
  using namespace dcgn::cli;
  CLI::App app{"dcgn: hierarchical graph-convolutional video sequence classifier"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic shot-structured corpus");
  synth_cmd->add_option("--config", synth.config, "Run config JSON")->required();
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--count", synth.count, "Number of videos")->required();
  synth_cmd->add_option("--offset", synth.first_index, "Index of the first video");
  synth_cmd->add_option("--manifest-name", synth.manifest_name, "Manifest file name");

  SegmentArgs segment;
  std::size_t segment_m = 0;
  double segment_c = 0.0;
  std::size_t segment_m_max = 0;
  std::string segment_config, segment_dump;
  auto* segment_cmd = app.add_subcommand("segment", "Split a feature file into shots");
  segment_cmd->add_option("--features", segment.features, "Feature file")->required();
  auto* m_opt = segment_cmd->add_option("--m", segment_m, "Number of shots");
  auto* auto_flag =
      segment_cmd->add_flag("--auto", segment.automatic, "Choose the shot count by penalized cost");
  auto* c_opt = segment_cmd->add_option("--c", segment_c, "Penalty weight for --auto");
  auto* m_max_opt =
      segment_cmd->add_option("--m-max", segment_m_max, "Largest shot count tried by --auto");
  auto* seg_cfg_opt = segment_cmd->add_option("--config", segment_config, "Run config JSON");
  auto* dump_opt = segment_cmd->add_option("--dump-similarity", segment_dump,
                                           "Write the frame similarity matrix here");
  m_opt->excludes(auto_flag);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train.config, "Run config JSON")->required();
  train_cmd->add_option("--train", train.train_manifest, "Training manifest")->required();
  train_cmd->add_option("--val", train.val_manifest, "Validation manifest")->required();
  train_cmd->add_option("--out", train.out_dir, "Output directory")->required();

  EvalArgs eval;
  std::string eval_config;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--manifest", eval.manifest, "Manifest to evaluate")->required();
  auto* eval_cfg_opt = eval_cmd->add_option("--config", eval_config,
                                            "Resolved config (default: next to the checkpoint)");

  GradcheckArgs gradcheck;
  std::string gradcheck_config, corrupt;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  auto* gc_cfg_opt = gc_cmd->add_option("--config", gradcheck_config, "Run config JSON");
  gc_cmd->add_option("--seed", gradcheck.seed, "Seed for the tiny model");
  auto* corrupt_opt =
      gc_cmd->add_option("--corrupt", corrupt, "Perturb the analytic gradient of this tensor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (*synth_cmd) return cmd_synth(synth, std::cout, std::cerr);
  if (*segment_cmd) {
    if (*m_opt) segment.m = segment_m;
    if (*c_opt) segment.c_penalty = segment_c;
    if (*m_max_opt) segment.m_max = segment_m_max;
    if (*seg_cfg_opt) segment.config = segment_config;
    if (*dump_opt) segment.dump_similarity = segment_dump;
    return cmd_segment(segment, std::cout, std::cerr);
  }
  if (*train_cmd) return cmd_train(train, std::cout, std::cerr);
  if (*eval_cmd) {
    if (*eval_cfg_opt) eval.config = eval_config;
    return cmd_eval(eval, std::cout, std::cerr);
  }
  if (*gc_cmd) {
    if (*gc_cfg_opt) gradcheck.config = gradcheck_config;
    if (*corrupt_opt) gradcheck.corrupt = corrupt;
    return cmd_gradcheck(gradcheck, std::cout, std::cerr);
  }
  return kConfigError;
}
