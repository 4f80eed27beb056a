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

#include "commands.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>

#include "dcgn/config.h"
#include "dcgn/data_io.h"
#include "dcgn/errors.h"
#include "dcgn/gradcheck.h"
#include "dcgn/model.h"
#include "dcgn/parallel.h"
#include "dcgn/rng.h"
#include "dcgn/shots.h"
#include "dcgn/synth.h"
#include "dcgn/training.h"
#include "json.hpp"

namespace dcgn::cli {
namespace {

using nlohmann::ordered_json;

// Maps the library's exception types onto exit codes.
int Guard(std::ostream& err, const char* command, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << command << ": config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CheckpointMismatchError& e) {
    err << command << ": checkpoint mismatch: " << e.what() << '\n';
    return kCheckpointMismatch;
  } catch (const FormatError& e) {
    err << command << ": format error: " << e.what() << '\n';
    return kFormatError;
  } catch (const IoError& e) {
    err << command << ": I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const NonFiniteError& e) {
    err << command << ": aborted: " << e.what() << '\n';
    return kNonFiniteLoss;
  } catch (const UndefinedMetricError& e) {
    err << command << ": " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    // ParameterError and DimensionError.
    err << command << ": invalid parameters: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << command << ": error: " << e.what() << '\n';
    return kFailure;
  }
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("--config", "file not found: " + path.string());
  }
  return load_run_config(path);
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ordered_json ReportJson(const EpochReport& r) { return ordered_json::parse(to_json_line(r)); }

}  // namespace

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, "synth", [&] {
    RunConfig cfg = LoadConfig(args.config);
    if (cfg.synth.dim == 0) throw ConfigError("synth.dim", "required field is missing");
    if (cfg.synth.num_classes == 0) {
      throw ConfigError("synth.num_classes", "required field is missing");
    }
    try {
      cfg.synth.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("synth", e.what());
    }
    if (args.count == 0) throw ConfigError("--count", "must be >= 1");
    const SynthOutput result =
        synth_corpus(cfg.synth, args.count, args.out_dir, args.first_index, args.manifest_name);
    WriteText(args.out_dir / "resolved_config.json", resolved_config_json(cfg));
    err << "synth: wrote " << args.count << " videos to " << args.out_dir.string() << '\n';
    ordered_json j = {{"manifest", result.manifest_path.string()}, {"count", args.count}};
    out << j.dump() << '\n';
    return kOk;
  });
}

int cmd_segment(const SegmentArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, "segment", [&] {
    RunConfig cfg = args.config ? LoadConfig(*args.config) : RunConfig{};
    if (args.m) cfg.segment.m = *args.m;
    if (args.c_penalty) cfg.segment.c_penalty = *args.c_penalty;
    if (args.m_max) cfg.segment.m_max = *args.m_max;
    if (args.automatic && args.m) throw ConfigError("--m", "cannot be combined with --auto");
    if (!(cfg.segment.c_penalty >= 0.0)) throw ConfigError("--c", "must be >= 0");

    const Tensor frames = read_features(args.features);
    if (frames.rows() == 0) throw ConfigError("--features", "file holds no frames");
    const SegmentCostTable costs = segment_costs(frames);
    KtsResult result;
    if (args.automatic) {
      const std::size_t m_max = cfg.segment.m_max == 0 ? frames.rows() : cfg.segment.m_max;
      if (m_max > frames.rows()) {
        throw ConfigError("--m-max", std::to_string(m_max) + " exceeds frame count " +
                                         std::to_string(frames.rows()));
      }
      cfg.segment.m_max = m_max;
      result = kts_auto(costs, cfg.segment.c_penalty, m_max);
    } else {
      if (cfg.segment.m == 0 || cfg.segment.m > frames.rows()) {
        throw ConfigError("--m", std::to_string(cfg.segment.m) + " must be in [1, " +
                                     std::to_string(frames.rows()) + "]");
      }
      result = kts_fixed(costs, cfg.segment.m);
    }
    if (args.dump_similarity) {
      std::ofstream dump(*args.dump_similarity, std::ios::trunc);
      if (!dump) throw IoError("cannot create " + args.dump_similarity->string());
      const Tensor sim = frame_similarity(frames);
      dump << std::setprecision(9);
      for (std::size_t i = 0; i < sim.rows(); ++i) {
        for (std::size_t j = 0; j < sim.cols(); ++j) dump << (j ? " " : "") << sim(i, j);
        dump << '\n';
      }
      if (!dump) throw IoError("write failed: " + args.dump_similarity->string());
    }
    ordered_json j = {
        {"cuts", result.boundaries.cuts}, {"cost", result.cost}, {"m", result.boundaries.m()}};
    if (args.automatic) j["objective"] = result.objective;
    j["config"] = {{"mode", args.automatic ? "auto" : "fixed"},
                   {"m", args.automatic ? result.boundaries.m() : cfg.segment.m},
                   {"c_penalty", cfg.segment.c_penalty},
                   {"m_max", cfg.segment.m_max},
                   {"penalty_log", "natural"},
                   {"kernel", "linear"}};
    out << j.dump() << '\n';
    err << "segment: " << frames.rows() << " frames -> " << result.boundaries.m() << " shots, cost "
        << result.cost << '\n';
    return kOk;
  });
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, "train", [&] {
    RunConfig cfg = LoadConfig(args.config);
    const std::size_t threads = default_thread_count();
    const ModelConfig& mc = cfg.train.model;
    const Manifest train_manifest = read_manifest(args.train_manifest, mc.num_classes);
    const Manifest val_manifest = read_manifest(args.val_manifest, mc.num_classes);
    const auto train = load_examples(train_manifest, mc, threads);
    const auto val = load_examples(val_manifest, mc, threads);
    err << "train: " << train.size() << " training / " << val.size() << " validation examples, "
        << threads << " threads\n";

    std::filesystem::create_directories(args.out_dir);
    TrainOptions options;
    options.threads = threads;
    options.out_dir = args.out_dir;
    options.on_epoch = [&](const EpochReport& r) {
      err << "epoch " << r.epoch << ": train_loss " << r.train_loss << "  val gap "
          << r.validation.gap << "  hit@1 " << r.validation.hit_at_1 << "  loss "
          << r.validation.loss << '\n';
    };
    RunConfig resolved = cfg;
    resolved.train.model = resolve_model_config(cfg.train.model, train);
    WriteText(args.out_dir / "resolved_config.json", resolved_config_json(resolved));

    const TrainResult result = run_training(resolved.train, train, val, options);
    ordered_json reports = ordered_json::array();
    for (const EpochReport& r : result.reports) reports.push_back(ReportJson(r));
    ordered_json j = {{"checkpoint", (args.out_dir / "model.dcgm").string()},
                      {"run_log", (args.out_dir / "run_log.jsonl").string()},
                      {"epochs", reports}};
    out << j.dump() << '\n';
    return kOk;
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, "eval", [&] {
    const std::filesystem::path config_path =
        args.config ? *args.config : args.checkpoint.parent_path() / "resolved_config.json";
    RunConfig cfg = LoadConfig(config_path);
    const ModelConfig& mc = cfg.train.model;
    if (mc.feature_dim == 0 || (mc.kind == ModelKind::kDcgn && mc.shot_kmax == 0)) {
      throw ConfigError("model", "feature_dim and shot_kmax must be resolved for eval");
    }
    DcgnModel model = DcgnModel::Create(mc);
    load_checkpoint(args.checkpoint, model);
    const Manifest manifest = read_manifest(args.manifest, mc.num_classes);
    if (manifest.entries.empty()) {
      throw UndefinedMetricError("metrics undefined: manifest " + args.manifest.string() +
                                 " has no examples");
    }
    const std::size_t threads = default_thread_count();
    std::vector<Example> examples;
    try {
      examples = load_examples(manifest, mc, threads);
    } catch (const ParameterError& e) {
      throw CheckpointMismatchError(e.what());
    }
    for (const Example& ex : examples) {
      if (ex.frames.cols() != mc.feature_dim) {
        throw CheckpointMismatchError("checkpoint expects " + std::to_string(mc.feature_dim) +
                                      "-dimensional features, example '" + ex.id + "' has " +
                                      std::to_string(ex.frames.cols()));
      }
    }
    const EvalReport report = evaluate(model, examples, cfg.train.top_n, threads);
    out << to_json(report) << '\n';
    err << "eval: " << report.examples << " examples, gap " << report.gap << ", hit@1 "
        << report.hit_at_1 << '\n';
    return kOk;
  });
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& out, std::ostream& err) {
  return Guard(err, "gradcheck", [&] {
    RunConfig cfg = args.config ? LoadConfig(*args.config) : RunConfig{};
    constexpr std::size_t kFrames = 12;
    constexpr std::size_t kDim = 6;
    ModelConfig mc = cfg.train.model;
    mc.kind = ModelKind::kDcgn;
    mc.num_classes = 3;
    mc.feature_dim = kDim;
    mc.layers = 2;
    mc.filter_size = 4;
    mc.shots_m = 4;
    mc.k = 2;
    mc.shot_kmax = 3;
    mc.seed = args.seed;

    SplitMix64 rng(derive_seed(args.seed, "gradcheck"));
    Tensor frames(kFrames, kDim);
    for (double& v : frames.values()) v = rng.normal();
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
      if (rng.uniform() < 0.5) labels.push_back(c);
    if (labels.empty()) labels.push_back(static_cast<int>(rng.uniform_int(0, 2)));
    const Example example = make_example("gradcheck", frames, labels, mc);

    DcgnModel model = DcgnModel::Create(mc);
    // Move every parameter (attention included) off its initialization so no
    // gradient path is trivially zero.
    for (ParamTensor* p : model.parameters())
      for (double& v : p->value.values()) v = 0.5 * rng.normal();

    ModelGrads grads = model.zero_grads();
    example_loss_and_grads(model, example, 1.0, &grads);
    model.set_grads(grads);
    if (args.corrupt) {
      bool found = false;
      for (ParamTensor* p : model.parameters()) {
        if (p->name != *args.corrupt) continue;
        for (double& g : p->grad.values()) g = 1.1 * g + 1e-3;
        found = true;
      }
      if (!found) throw ConfigError("--corrupt", "no parameter named " + *args.corrupt);
    }
    GradcheckOptions options;  // ε = 1e-5, tolerance 1e-4
    const GradcheckReport report =
        finite_diff_check([&] { return example_loss_and_grads(model, example, 1.0, nullptr); },
                          model.parameters(), options);

    ordered_json params = ordered_json::array();
    for (const ParamCheck& c : report.params) {
      params.push_back({{"name", c.name},
                        {"max_relative_error", c.max_relative_error},
                        {"max_absolute_error", c.max_absolute_error},
                        {"passed", c.passed}});
      if (!c.passed) {
        err << "gradcheck: FAIL " << c.name << " max relative error " << c.max_relative_error
            << '\n';
      }
    }
    ordered_json j = {{"passed", report.passed},
                      {"seed", args.seed},
                      {"max_relative_error", report.max_relative_error},
                      {"epsilon", options.epsilon},
                      {"tolerance", options.tolerance},
                      {"config",
                       {{"frames", kFrames},
                        {"dim", kDim},
                        {"layers", mc.layers},
                        {"classes", mc.num_classes},
                        {"shots_m", mc.shots_m},
                        {"k", mc.k},
                        {"pooling", to_string(mc.pooling)},
                        {"activation", to_string(mc.activation)}}},
                      {"params", params}};
    out << j.dump() << '\n';
    err << "gradcheck: " << (report.passed ? "pass" : "FAIL") << " (max relative error "
        << report.max_relative_error << ")\n";
    return report.passed ? kOk : kFailure;
  });
}

}  // namespace dcgn::cli
