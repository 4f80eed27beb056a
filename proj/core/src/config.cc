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

#include <fstream>
#include <iterator>
#include <set>

#include "dcgn/errors.h"
#include "json.hpp"

namespace dcgn {
namespace {

using nlohmann::json;

// Reads fields out of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (root.contains(name_)) {
      node_ = &root.at(name_);
      if (!node_->is_object()) throw ConfigError(name_, "must be an object");
    }
  }

  bool present() const { return node_ != nullptr; }
  bool has(const std::string& key) const { return node_ && node_->contains(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = node_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key), "wrong type");
    }
  }

  void get_count(const std::string& key, std::size_t& out) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = node_->at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(path(key), "must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void get_range(const std::string& key, CountRange& out) {
    seen_.insert(key);
    if (!has(key)) return;
    const json& v = node_->at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() ||
        !v[1].is_number_unsigned()) {
      throw ConfigError(path(key), "must be [lo, hi] with non-negative integers");
    }
    out = {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
  }

  template <typename Enum, typename Parse>
  void get_enum(const std::string& key, Enum& out, Parse parse) {
    std::string s;
    get(key, s);
    if (!has(key)) return;
    try {
      out = parse(s);
    } catch (const ParameterError& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  // Keys that admit a single value.
  void fixed(const std::string& key, const std::string& only) {
    std::string s = only;
    get(key, s);
    if (s != only) throw ConfigError(path(key), "only \"" + only + "\" is supported");
  }

  void finish() const {
    if (!node_) return;
    for (const auto& [key, _] : node_->items()) {
      if (!seen_.count(key)) throw ConfigError(path(key), "unknown key");
    }
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<root>", "must be a JSON object");
  static const std::set<std::string> kSections = {"model", "train", "synth", "segment", "metrics"};
  for (const auto& [key, _] : root.items()) {
    if (!kSections.count(key)) throw ConfigError(key, "unknown section");
  }

  RunConfig cfg;

  Section synth(root, "synth");
  synth.get_count("num_classes", cfg.synth.num_classes);
  synth.get_count("dim", cfg.synth.dim);
  synth.get_count("prototypes_per_class", cfg.synth.prototypes_per_class);
  synth.get_count("prototype_rank", cfg.synth.prototype_rank);
  synth.get_range("classes_per_video", cfg.synth.classes_per_video);
  synth.get_range("shots_per_video", cfg.synth.shots_per_video);
  synth.get_range("frames_per_shot", cfg.synth.frames_per_shot);
  synth.get("noise_std", cfg.synth.noise_std);
  synth.get("seed", cfg.synth.seed);
  synth.fixed("noise", "splitmix64_box_muller");
  synth.finish();

  ModelConfig& m = cfg.train.model;
  if (cfg.synth.num_classes != 0) m.num_classes = cfg.synth.num_classes;
  Section model(root, "model");
  model.get_enum("kind", m.kind, model_kind_from_string);
  model.get_count("num_classes", m.num_classes);
  model.get_count("feature_dim", m.feature_dim);
  model.get_count("layers", m.layers);
  model.get_count("filter_size", m.filter_size);
  model.get_count("moe_mixtures", m.moe_mixtures);
  model.get_enum("pooling", m.pooling, pooling_from_string);
  model.get_enum("activation", m.activation, activation_from_string);
  model.get("affinity_clamp_negative", m.graph.clamp_negative);
  model.get_enum("adjacency_norm", m.graph.norm, adjacency_norm_from_string);
  model.get_count("shots_m", m.shots_m);
  model.get_count("k", m.k);
  model.get_count("shot_kmax", m.shot_kmax);
  model.get_enum("loss", m.loss.kind, loss_kind_from_string);
  model.get("score_clip", m.loss.clip);
  model.get("seed", m.seed);
  model.fixed("gating", "per_class");
  model.fixed("dummy_expert", "none");
  model.fixed("attention_bias", "scalar");
  model.fixed("conv_layout", "flatten");
  model.fixed("shot_window", "pad_or_truncate");
  model.fixed("init", "glorot_uniform");
  model.finish();

  Section train(root, "train");
  TrainConfig& t = cfg.train;
  train.get("base_lr", t.base_lr);
  train.get("lr_decay", t.lr_decay);
  train.get_count("lr_decay_examples", t.lr_decay_examples);
  train.get_count("batch_size", t.batch_size);
  train.get_count("epochs", t.epochs);
  train.get_enum("optimizer", t.optimizer, optimizer_from_string);
  train.get("adam_beta1", t.adam_beta1);
  train.get("adam_beta2", t.adam_beta2);
  train.get("adam_epsilon", t.adam_epsilon);
  train.get("seed", t.seed);
  train.finish();

  Section metrics(root, "metrics");
  metrics.get_count("top_n", t.top_n);
  metrics.fixed("gap_variant", "global");
  metrics.finish();

  Section segment(root, "segment");
  segment.get_count("m", cfg.segment.m);
  segment.get("c_penalty", cfg.segment.c_penalty);
  segment.get_count("m_max", cfg.segment.m_max);
  segment.fixed("penalty_log", "natural");
  segment.fixed("kernel", "linear");
  segment.finish();

  try {
    t.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("train", e.what());
  }
  if (cfg.segment.m == 0) throw ConfigError("segment.m", "must be >= 1");
  if (!(cfg.segment.c_penalty >= 0.0)) throw ConfigError("segment.c_penalty", "must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

std::string resolved_config_json(const RunConfig& cfg) {
  const ModelConfig& m = cfg.train.model;
  const TrainConfig& t = cfg.train;
  const SynthSpec& s = cfg.synth;
  nlohmann::ordered_json j;
  j["model"] = {{"kind", to_string(m.kind)},
                {"num_classes", m.num_classes},
                {"feature_dim", m.feature_dim},
                {"layers", m.layers},
                {"filter_size", m.filter_size},
                {"moe_mixtures", m.moe_mixtures},
                {"pooling", to_string(m.pooling)},
                {"activation", to_string(m.activation)},
                {"affinity_clamp_negative", m.graph.clamp_negative},
                {"adjacency_norm", to_string(m.graph.norm)},
                {"shots_m", m.shots_m},
                {"k", m.k},
                {"shot_kmax", m.shot_kmax},
                {"loss", to_string(m.loss.kind)},
                {"score_clip", m.loss.clip},
                {"seed", m.seed},
                {"gating", "per_class"},
                {"dummy_expert", "none"},
                {"attention_bias", "scalar"},
                {"conv_layout", "flatten"},
                {"shot_window", "pad_or_truncate"},
                {"init", "glorot_uniform"}};
  j["train"] = {{"base_lr", t.base_lr},
                {"lr_decay", t.lr_decay},
                {"lr_decay_examples", t.lr_decay_examples},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"optimizer", to_string(t.optimizer)},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_epsilon", t.adam_epsilon},
                {"seed", t.seed}};
  j["synth"] = {{"num_classes", s.num_classes},
                {"dim", s.dim},
                {"prototypes_per_class", s.prototypes_per_class},
                {"prototype_rank", s.prototype_rank},
                {"classes_per_video", {s.classes_per_video.lo, s.classes_per_video.hi}},
                {"shots_per_video", {s.shots_per_video.lo, s.shots_per_video.hi}},
                {"frames_per_shot", {s.frames_per_shot.lo, s.frames_per_shot.hi}},
                {"noise_std", s.noise_std},
                {"seed", s.seed},
                {"noise", "splitmix64_box_muller"}};
  j["segment"] = {{"m", cfg.segment.m},
                  {"c_penalty", cfg.segment.c_penalty},
                  {"m_max", cfg.segment.m_max},
                  {"penalty_log", "natural"},
                  {"kernel", "linear"}};
  j["metrics"] = {{"top_n", t.top_n}, {"gap_variant", "global"}};
  return j.dump(2);
}

}  // namespace dcgn
