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

#include "dcgn/config.h"

#include <gtest/gtest.h>

#include "dcgn/errors.h"
#include "json.hpp"

namespace dcgn {
namespace {

std::string FieldOf(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

TEST(RunConfigTest, EmptyDocumentYieldsDefaults) {
  const RunConfig cfg = parse_run_config("{}");
  EXPECT_EQ(cfg.train.base_lr, 0.001);
  EXPECT_EQ(cfg.train.lr_decay, 0.8);
  EXPECT_EQ(cfg.train.batch_size, 32u);
  EXPECT_EQ(cfg.train.epochs, 5u);
  EXPECT_EQ(cfg.train.model.layers, 5u);
  EXPECT_EQ(cfg.train.model.filter_size, 64u);
  EXPECT_EQ(cfg.train.model.moe_mixtures, 2u);
  EXPECT_EQ(cfg.train.model.activation, Activation::kSigmoid);
  EXPECT_EQ(cfg.train.model.graph.norm, AdjacencyNorm::kSymmetric);
  EXPECT_TRUE(cfg.train.model.graph.clamp_negative);
  EXPECT_EQ(cfg.train.model.loss.kind, LossKind::kBinary);
}

TEST(RunConfigTest, ReadsEverySection) {
  const RunConfig cfg = parse_run_config(R"({
    "model": {"kind": "average_baseline", "pooling": "average", "activation": "relu",
              "adjacency_norm": "row", "affinity_clamp_negative": false, "loss": "categorical",
              "shots_m": 8, "k": 3, "layers": 1, "filter_size": 16, "seed": 4},
    "train": {"base_lr": 0.01, "batch_size": 8, "epochs": 2, "optimizer": "sgd"},
    "synth": {"num_classes": 12, "dim": 20, "frames_per_shot": [2, 3], "prototype_rank": 4},
    "segment": {"m": 5, "c_penalty": 0.5},
    "metrics": {"top_n": 10, "gap_variant": "global"}})");
  const ModelConfig& m = cfg.train.model;
  EXPECT_EQ(m.kind, ModelKind::kAverageBaseline);
  EXPECT_EQ(m.pooling, Pooling::kAverage);
  EXPECT_EQ(m.activation, Activation::kRelu);
  EXPECT_EQ(m.graph.norm, AdjacencyNorm::kRow);
  EXPECT_FALSE(m.graph.clamp_negative);
  EXPECT_EQ(m.loss.kind, LossKind::kCategorical);
  EXPECT_EQ(m.shots_m, 8u);
  EXPECT_EQ(m.k, 3u);
  EXPECT_EQ(m.num_classes, 12u) << "model.num_classes follows synth.num_classes";
  EXPECT_EQ(cfg.train.optimizer, OptimizerKind::kSgd);
  EXPECT_EQ(cfg.train.top_n, 10u);
  EXPECT_EQ(cfg.synth.frames_per_shot.hi, 3u);
  EXPECT_EQ(cfg.synth.prototype_rank, 4u);
  EXPECT_EQ(cfg.segment.m, 5u);
  EXPECT_EQ(cfg.segment.c_penalty, 0.5);
}

TEST(RunConfigTest, UnknownKeysAndSectionsNameTheField) {
  EXPECT_EQ(FieldOf(R"({"model": {"poolng": "average"}})"), "model.poolng");
  EXPECT_EQ(FieldOf(R"({"optimizer": {}})"), "optimizer");
  EXPECT_EQ(FieldOf(R"({"train": {"epochs": -1}})"), "train.epochs");
  EXPECT_EQ(FieldOf(R"({"train": {"base_lr": "fast"}})"), "train.base_lr");
  EXPECT_EQ(FieldOf(R"({"model": {"pooling": "max"}})"), "model.pooling");
  EXPECT_EQ(FieldOf(R"({"synth": {"shots_per_video": [1]}})"), "synth.shots_per_video");
  EXPECT_EQ(FieldOf(R"({"segment": {"m": 0}})"), "segment.m");
  EXPECT_EQ(FieldOf("[1, 2]"), "<root>");
  EXPECT_EQ(FieldOf("{not json"), "<root>");
}

TEST(RunConfigTest, SingleValuedTogglesRejectAlternatives) {
  EXPECT_EQ(FieldOf(R"({"metrics": {"gap_variant": "per_example"}})"), "metrics.gap_variant");
  EXPECT_EQ(FieldOf(R"({"model": {"gating": "shared"}})"), "model.gating");
  EXPECT_EQ(FieldOf(R"({"segment": {"penalty_log": "log2"}})"), "segment.penalty_log");
  EXPECT_EQ(FieldOf(R"({"model": {"gating": "per_class"}})"), "<accepted>");
}

TEST(RunConfigTest, ResolvedConfigRoundTripsAndListsEveryToggle) {
  RunConfig cfg = parse_run_config(R"({"model": {"pooling": "average", "shots_m": 9},
                                       "synth": {"num_classes": 5, "dim": 7}})");
  const std::string text = resolved_config_json(cfg);
  EXPECT_EQ(resolved_config_json(parse_run_config(text)), text);
  const auto j = nlohmann::json::parse(text);
  for (const char* key : {"pooling", "activation", "affinity_clamp_negative", "adjacency_norm",
                          "loss", "gating", "attention_bias", "init", "shot_window"})
    EXPECT_TRUE(j.at("model").contains(key)) << key;
  EXPECT_EQ(j.at("metrics").at("gap_variant"), "global");
  EXPECT_EQ(j.at("synth").at("noise"), "splitmix64_box_muller");
  EXPECT_EQ(j.at("segment").at("penalty_log"), "natural");
  EXPECT_EQ(j.at("model").at("shots_m"), 9);
}

TEST(RunConfigTest, MissingFileIsAnIoError) {
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), IoError);
}

}  // namespace
}  // namespace dcgn
