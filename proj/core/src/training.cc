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

#include "dcgn/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dcgn/errors.h"
#include "dcgn/parallel.h"
#include "dcgn/rng.h"
#include "json.hpp"

namespace dcgn {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::kAdam;
  if (s == "sgd") return OptimizerKind::kSgd;
  throw ParameterError("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(base_lr >= 0.0)) throw ParameterError("train.base_lr must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw ParameterError("train.lr_decay must be in (0, 1]");
  }
  if (lr_decay_examples == 0) throw ParameterError("train.lr_decay_examples must be >= 1");
  if (batch_size == 0) throw ParameterError("train.batch_size must be >= 1");
  if (top_n == 0) throw ParameterError("train.top_n must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ParameterError("train.adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ParameterError("train.adam_epsilon must be > 0");
}

double lr_schedule(std::size_t step_examples, const TrainConfig& cfg) {
  const std::size_t decays = step_examples / cfg.lr_decay_examples;
  double lr = cfg.base_lr;
  for (std::size_t i = 0; i < decays && lr > 0.0; ++i) lr *= cfg.lr_decay;
  return lr;
}

Example make_example(std::string id, Tensor frames, std::vector<int> labels,
                     const ModelConfig& model) {
  Example ex;
  ex.id = std::move(id);
  ex.labels = std::move(labels);
  if (model.kind == ModelKind::kDcgn) {
    if (frames.rows() < model.shots_m) {
      throw ParameterError("example '" + ex.id + "' has " + std::to_string(frames.rows()) +
                           " frames, fewer than shots_m=" + std::to_string(model.shots_m));
    }
    ex.shots = kts_fixed(segment_costs(frames), model.shots_m).boundaries;
  } else {
    ex.shots.n = frames.rows();
  }
  ex.frames = std::move(frames);
  return ex;
}

std::vector<Example> load_examples(const Manifest& manifest, const ModelConfig& model,
                                   std::size_t threads) {
  std::vector<Example> out(manifest.entries.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    out[i] = make_example(e.id, read_features(manifest.resolve(e)), e.labels, model);
  });
  for (const Example& ex : out) {
    for (int l : ex.labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= model.num_classes) {
        throw ParameterError("example '" + ex.id + "': label " + std::to_string(l) +
                             " outside [0, " + std::to_string(model.num_classes) + ")");
      }
    }
  }
  return out;
}

ModelConfig resolve_model_config(ModelConfig model, std::span<const Example> train) {
  if (train.empty()) {
    if (model.feature_dim == 0 || model.shot_kmax == 0) {
      throw ParameterError("cannot infer model shape from an empty training set");
    }
    return model;
  }
  if (model.feature_dim == 0) model.feature_dim = train.front().frames.cols();
  for (const Example& ex : train) {
    if (ex.frames.cols() != model.feature_dim) {
      throw DimensionError("example '" + ex.id + "' has " + std::to_string(ex.frames.cols()) +
                           "-dimensional frames, expected " + std::to_string(model.feature_dim));
    }
  }
  if (model.shot_kmax == 0) {
    std::vector<std::size_t> lengths;
    for (const Example& ex : train) lengths.push_back(ex.frames.rows());
    std::sort(lengths.begin(), lengths.end());
    const std::size_t median = lengths[lengths.size() / 2];
    model.shot_kmax = std::max<std::size_t>(1, (median + model.shots_m - 1) / model.shots_m);
  }
  return model;
}

OptimizerState OptimizerState::For(const DcgnModel& model) {
  OptimizerState s;
  for (const ParamTensor* p : model.parameters()) {
    s.first_moment.emplace_back(p->value.rows(), p->value.cols());
    s.second_moment.emplace_back(p->value.rows(), p->value.cols());
  }
  return s;
}

double example_loss_and_grads(const DcgnModel& model, const Example& example, double scale,
                              ModelGrads* grads) {
  ModelCache cache;
  const Prediction pred = model.forward(example.frames, example.shots, &cache);
  const double loss = multilabel_loss(pred, example.labels, model.config.loss);
  if (grads != nullptr) {
    std::vector<double> d = multilabel_loss_grad(pred, example.labels, model.config.loss);
    for (double& v : d) v *= scale;
    model.backward(example.frames, cache, d, *grads);
  }
  return loss;
}

namespace {

void ApplyUpdate(DcgnModel& model, OptimizerState& state, double lr, const TrainConfig& cfg) {
  auto params = model.parameters();
  if (cfg.optimizer == OptimizerKind::kSgd) {
    for (ParamTensor* p : params)
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
    return;
  }
  ++state.steps;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.steps));
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamTensor& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  }
}

}  // namespace

double train_step(DcgnModel& model, OptimizerState& state, std::span<const Example* const> batch,
                  double lr, const TrainConfig& cfg, std::size_t threads) {
  if (batch.empty()) throw ParameterError("train_step: empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<ModelGrads> grads(batch.size());
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    grads[i] = model.zero_grads();
    losses[i] = example_loss_and_grads(model, *batch[i], scale, &grads[i]);
  });
  double loss = 0.0;
  for (double l : losses) loss += l;
  loss *= scale;
  if (!std::isfinite(loss)) {
    std::string ids;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!std::isfinite(losses[i])) ids += (ids.empty() ? "" : ",") + batch[i]->id;
    }
    throw NonFiniteError("non-finite loss at optimizer step " + std::to_string(state.steps + 1) +
                         " (examples: " + (ids.empty() ? "batch overflow" : ids) + ")");
  }
  // Reduction in batch order keeps the sum independent of thread scheduling.
  ModelGrads total = std::move(grads[0]);
  for (std::size_t i = 1; i < grads.size(); ++i) total += grads[i];
  model.set_grads(total);
  ApplyUpdate(model, state, lr, cfg);
  return loss;
}

EvalReport evaluate(const DcgnModel& model, std::span<const Example> examples, std::size_t top_n,
                    std::size_t threads) {
  PredictionSet set;
  set.top_n = top_n;
  set.examples.resize(examples.size());
  std::vector<double> losses(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    const Example& ex = examples[i];
    const Prediction pred = model.forward(ex.frames, ex.shots);
    losses[i] = multilabel_loss(pred, ex.labels, model.config.loss);
    set.examples[i] = make_example_predictions(ex.id, pred.scores, ex.labels, top_n);
  });
  EvalReport r;
  r.examples = examples.size();
  r.gap = gap(set);
  r.hit_at_1 = hit_at_1(set);
  r.loss =
      std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(examples.size());
  return r;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j = {{"gap", report.gap},
                              {"hit_at_1", report.hit_at_1},
                              {"loss", report.loss},
                              {"examples", report.examples},
                              {"gap_variant", "global"}};
  return j.dump();
}

std::string to_json_line(const EpochReport& report) {
  nlohmann::ordered_json j = {{"epoch", report.epoch},
                              {"examples_seen", report.examples_seen},
                              {"lr", report.lr},
                              {"train_loss", report.train_loss},
                              {"gap", report.validation.gap},
                              {"hit_at_1", report.validation.hit_at_1},
                              {"loss", report.validation.loss},
                              {"examples", report.validation.examples},
                              {"gap_variant", "global"}};
  return j.dump();
}

TrainResult run_training(const TrainConfig& cfg, std::span<const Example> train,
                         std::span<const Example> validation, const TrainOptions& options) {
  cfg.validate();
  TrainResult result;
  result.config = cfg;
  result.config.model = resolve_model_config(cfg.model, train);
  result.model = DcgnModel::Create(result.config.model);
  DcgnModel& model = result.model;
  OptimizerState state = OptimizerState::For(model);

  std::ofstream log;
  if (options.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.out_dir, ec);
    if (ec) throw IoError("cannot create " + options.out_dir->string() + ": " + ec.message());
    const auto log_path = *options.out_dir / "run_log.jsonl";
    log.open(log_path, std::ios::trunc);
    if (!log) throw IoError("cannot create " + log_path.string());
  }
  auto finish_epoch = [&](EpochReport report) {
    report.validation = evaluate(model, validation, cfg.top_n, options.threads);
    if (options.out_dir) {
      log << to_json_line(report) << '\n' << std::flush;
      if (!log) throw IoError("write failed: run_log.jsonl");
      save_checkpoint(
          *options.out_dir / ("checkpoint_epoch_" + std::to_string(report.epoch) + ".dcgm"), model);
    }
    if (options.on_epoch) options.on_epoch(report);
    result.reports.push_back(report);
  };

  std::size_t seen = 0;
  if (cfg.epochs == 0) {
    EpochReport r;
    r.lr = lr_schedule(0, cfg);
    finish_epoch(r);
  }
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(cfg.seed, "shuffle/" + std::to_string(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_int(0, i - 1)]);
    }
    double loss_sum = 0.0;
    double lr = lr_schedule(seen, cfg);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
      lr = lr_schedule(seen, cfg);
      loss_sum += train_step(model, state, batch, lr, cfg, options.threads) *
                  static_cast<double>(batch.size());
      seen += batch.size();
    }
    EpochReport r;
    r.epoch = epoch;
    r.examples_seen = seen;
    r.lr = lr;
    r.train_loss = train.empty() ? 0.0 : loss_sum / static_cast<double>(train.size());
    finish_epoch(r);
  }
  if (options.out_dir) save_checkpoint(*options.out_dir / "model.dcgm", model);
  return result;
}

}  // namespace dcgn
