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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: dcgn_acceptance <desk config json>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.h"
#include "dcgn/config.h"
#include "dcgn/data_io.h"
#include "dcgn/errors.h"
#include "dcgn/layers.h"
#include "dcgn/metrics.h"
#include "dcgn/model.h"
#include "dcgn/parallel.h"
#include "dcgn/rng.h"
#include "dcgn/shots.h"
#include "dcgn/synth.h"
#include "dcgn/training.h"
#include "json.hpp"
#include "oracles.h"
#include "test_util.h"

namespace dcgn::acceptance {
namespace {

using Clock = std::chrono::steady_clock;

// A criterion body returns "" on success or a description of the first
// violation; `detail` collects the numbers worth printing either way.
struct Outcome {
  std::string failure;
  std::string detail;
};

bool RunCriterion(int number, const std::string& name, double budget_seconds,
                  const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome.failure = std::string("exception: ") + e.what();
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (outcome.failure.empty() && seconds > budget_seconds) {
    outcome.failure = "took longer than " + std::to_string(budget_seconds) + " s";
  }
  const bool pass = outcome.failure.empty();
  char timing[32];
  std::snprintf(timing, sizeof(timing), "%.2f s", seconds);
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << number << " " << name << ": "
            << (pass ? outcome.detail : outcome.failure + " | " + outcome.detail) << " [" << timing
            << "]" << std::endl;
  return pass;
}

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

// ---- 1: segmentation against exhaustive enumeration ----------------------

Outcome KtsMatchesEnumeration() {
  SplitMix64 rng(derive_seed(2024, "kts"));
  std::size_t with_ties = 0;
  double worst = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const std::size_t n = rng.uniform_int(1, 12);
    const std::size_t d = rng.uniform_int(1, 4);
    const std::size_t m = rng.uniform_int(1, std::min<std::size_t>(4, n));
    // Odd instances draw from {0, 1, 2}: repeated frames, exactly tied partitions.
    const bool discrete = instance % 2 == 1;
    Tensor f(n, d);
    for (double& v : f.values())
      v = discrete ? static_cast<double>(rng.uniform_int(0, 2)) : rng.normal();
    with_ties += discrete;

    const oracle::Partition expected = oracle::ExhaustivePartition(f, m);
    const KtsResult got = kts_fixed(segment_costs(f), m);
    // Prefix sums and the direct two-pass scatter round differently.
    const double deviation = std::abs(got.cost - expected.cost);
    worst = std::max(worst, deviation / std::max(1.0, std::abs(expected.cost)));
    const double tol = 1e-9 * std::max(1.0, std::abs(expected.cost));
    if (got.boundaries.cuts != expected.cuts || deviation > tol) {
      std::ostringstream os;
      os << "instance " << instance << " (N=" << n << ", D=" << d << ", m=" << m
         << "): cuts/cost differ, cost " << got.cost << " vs " << expected.cost;
      return {os.str(), ""};
    }
  }
  return {"", "100/100 identical cuts (" + std::to_string(with_ties) +
                  " with repeated frames), max relative cost deviation " + Fmt("%.1e", worst)};
}

// ---- 2: gradient check through the CLI entry point -----------------------

Outcome GradcheckSeeds() {
  double worst = 0.0;
  std::size_t tensors = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    cli::GradcheckArgs args;
    args.seed = seed;
    std::ostringstream out, err;
    const int code = cli::cmd_gradcheck(args, out, err);
    const auto j = nlohmann::json::parse(out.str());
    if (j.at("epsilon").get<double>() != 1e-5 || j.at("tolerance").get<double>() != 1e-4) {
      return {"unexpected epsilon/tolerance in report", ""};
    }
    bool saw_shot = false, saw_att = false, saw_prop = false, saw_moe = false;
    std::set<std::string> layers;
    for (const auto& p : j.at("params")) {
      const std::string name = p.at("name");
      const double rel = p.at("max_relative_error");
      worst = std::max(worst, rel);
      if (!p.at("passed").get<bool>() || !(rel <= 1e-4)) {
        return {
            "seed " + std::to_string(seed) + ": " + name + " relative error " + std::to_string(rel),
            ""};
      }
      saw_shot |= name.rfind("shot.", 0) == 0;
      saw_att |= name.find("w_att") != std::string::npos;
      saw_prop |= name.find("w_prop") != std::string::npos;
      saw_moe |= name.rfind("moe.", 0) == 0;
      if (name.find("w_att") != std::string::npos) layers.insert(name.substr(0, name.find('.')));
    }
    if (code != cli::kOk)
      return {"seed " + std::to_string(seed) + ": exit " + std::to_string(code), ""};
    if (!(saw_shot && saw_att && saw_prop && saw_moe) || layers.size() != 2) {
      return {"seed " + std::to_string(seed) + ": report misses a parameter group", ""};
    }
    tensors = j.at("params").size();
  }
  return {"", "seeds 1-3, " + std::to_string(tensors) + " tensors each, worst relative error " +
                  Fmt("%.2e", worst)};
}

// ---- 3: attention pooling at zero parameters -----------------------------

Outcome AttentionReducesToAverage() {
  SplitMix64 rng(derive_seed(2024, "pooling"));
  double worst = 0.0;
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = rng.uniform_int(1, 40);
    const std::size_t d = rng.uniform_int(1, 16);
    const std::size_t k = rng.uniform_int(1, 5);
    const Tensor h = testing::RandomTensor(n, d, rng, 3.0);
    // Window means computed directly.
    const std::size_t out_rows = (n + k - 1) / k;
    Tensor expected(out_rows, d);
    for (std::size_t w = 0; w < out_rows; ++w) {
      const std::size_t end = std::min(n, (w + 1) * k);
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t t = w * k; t < end; ++t) s += h(t, j);
        expected(w, j) = s / static_cast<double>(end - w * k);
      }
    }
    const Tensor att = attention_pool(h, k, Tensor(d, 1), 0.0);
    const Tensor avg = average_pool(h, k);
    if (att.rows() != out_rows || att.cols() != d || avg.rows() != out_rows) {
      return {"case " + std::to_string(c) + ": shape " + att.shape_string(), ""};
    }
    for (std::size_t i = 0; i < att.size(); ++i) {
      worst = std::max({worst, std::abs(att[i] - avg[i]), std::abs(att[i] - expected[i])});
    }
    if (worst > 1e-12) return {"case " + std::to_string(c) + Fmt(": deviation %.3e", worst), ""};
  }
  return {"", "1000 cases, max deviation " + Fmt("%.2e", worst)};
}

// ---- 4: node counts through the stack ------------------------------------

std::string CheckStack(std::size_t n, std::size_t k, std::size_t layers, std::size_t d,
                       SplitMix64& rng, std::vector<std::size_t>* counts_out = nullptr) {
  std::vector<LayerParams> params;
  for (std::size_t l = 0; l < layers; ++l) {
    params.push_back(LayerParams::Create("layer" + std::to_string(l), k, d, d, rng.next_u64()));
  }
  std::vector<std::size_t> expected{n};
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t m = 0;
    for (std::size_t left = expected.back(); left > 0; left -= std::min(left, k)) ++m;
    expected.push_back(m);
  }
  const std::vector<std::size_t> counts = stack_node_counts(n, params);
  LayerOptions options;
  options.activation = Activation::kRelu;
  StackCache cache;
  const Tensor flat = stack_forward(testing::RandomTensor(n, d, rng, 1.0), params, options, &cache);
  std::vector<std::size_t> observed{n};
  for (const LayerCache& c : cache.layers) observed.push_back(c.output.hidden.rows());
  if (counts_out) *counts_out = observed;
  if (observed != expected || counts.back() != expected.back() ||
      flat.cols() != expected.back() * d || flat.rows() != 1) {
    std::ostringstream os;
    os << "N=" << n << " k=" << k << " L=" << layers << ": expected final " << expected.back()
       << ", observed " << observed.back();
    return os.str();
  }
  return "";
}

Outcome ShapeLaw() {
  SplitMix64 rng(derive_seed(2024, "shapes"));
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = rng.uniform_int(1, 64);
    const std::size_t k = rng.uniform_int(1, 4);
    const std::size_t layers = rng.uniform_int(1, 4);
    const std::size_t d = rng.uniform_int(1, 6);
    const std::string failure = CheckStack(n, k, layers, d, rng);
    if (!failure.empty()) return {"config " + std::to_string(c) + ": " + failure, ""};
  }
  std::vector<std::size_t> counts;
  const std::string failure = CheckStack(15, 3, 2, 4, rng, &counts);
  if (!failure.empty()) return {failure, ""};
  if (counts != std::vector<std::size_t>{15, 5, 2}) return {"15-node case diverged", ""};
  return {"", "50 random stacks match iterated ceil(n/k); 15 -> 5 -> 2 at k=3"};
}

// ---- 5: GAP against brute force ------------------------------------------

Outcome GapMatchesBruteForce() {
  SplitMix64 rng(derive_seed(2024, "gap"));
  double worst = 0.0;
  int sets = 0;
  while (sets < 200) {
    const std::size_t examples = rng.uniform_int(1, 5);
    const std::size_t classes = rng.uniform_int(1, 6);
    PredictionSet preds;
    preds.top_n = rng.uniform_int(1, classes);
    std::size_t positives = 0;
    for (std::size_t e = 0; e < examples; ++e) {
      std::vector<double> scores(classes);
      // Coarse confidences make global ties common.
      for (double& s : scores) s = static_cast<double>(rng.uniform_int(0, 4)) / 4.0;
      std::vector<int> labels;
      for (std::size_t c = 0; c < classes; ++c)
        if (rng.uniform() < 0.4) labels.push_back(static_cast<int>(c));
      positives += labels.size();
      // Ids out of insertion order.
      preds.examples.push_back(make_example_predictions("x" + std::to_string((e * 3) % examples),
                                                        scores, labels, preds.top_n));
    }
    if (positives == 0) continue;
    std::set<std::string> ids;
    for (const auto& ex : preds.examples) ids.insert(ex.id);
    if (ids.size() != preds.examples.size()) continue;
    ++sets;
    const double got = gap(preds);
    const double expected = oracle::BruteForceGap(preds);
    worst = std::max(worst, std::abs(got - expected));
    if (std::abs(got - expected) > 1e-12) {
      return {"set " + std::to_string(sets) + Fmt(": gap %.17g vs %.17g", got, expected), ""};
    }
  }

  PredictionSet one;
  one.examples.push_back({"a", {1}, {{1, 0.9}, {0, 0.1}}});
  const double perfect = gap(one);
  one.examples[0].top = {{0, 0.9}, {1, 0.1}};
  const double half = gap(one);
  if (perfect != 1.0 || half != 0.5) {
    return {Fmt("worked examples gave %.17g and %.17g", perfect, half), ""};
  }
  return {"", "200 sets, max deviation " + Fmt("%.2e", worst) +
                  "; worked examples give exactly 1.0 and 0.5"};
}

// ---- 6 and 8: desk-scale ordering and determinism ------------------------

struct Corpus {
  std::vector<Example> train;
  std::vector<Example> val;
};

Corpus BuildCorpus(const RunConfig& cfg, const std::filesystem::path& dir) {
  const SynthOutput train_out = synth_corpus(cfg.synth, 1000, dir, 0, "train.jsonl");
  const SynthOutput val_out = synth_corpus(cfg.synth, 200, dir, 1000, "val.jsonl");
  const std::size_t threads = default_thread_count();
  const ModelConfig& mc = cfg.train.model;
  return {load_examples(read_manifest(train_out.manifest_path, mc.num_classes), mc, threads),
          load_examples(read_manifest(val_out.manifest_path, mc.num_classes), mc, threads)};
}

std::vector<std::string> Train(const RunConfig& cfg, const Corpus& corpus, ModelKind kind,
                               Pooling pooling) {
  TrainConfig t = cfg.train;
  t.model.kind = kind;
  t.model.pooling = pooling;
  t.model = resolve_model_config(t.model, corpus.train);
  TrainOptions options;
  options.threads = default_thread_count();
  const TrainResult result = run_training(t, corpus.train, corpus.val, options);
  std::vector<std::string> lines;
  for (const EpochReport& r : result.reports) lines.push_back(to_json_line(r));
  return lines;
}

double FinalGap(const std::vector<std::string>& lines) {
  return nlohmann::json::parse(lines.back()).at("gap").get<double>();
}

std::string CheckDeskConfig(const RunConfig& cfg) {
  const SynthSpec& s = cfg.synth;
  if (s.num_classes != 16 || s.dim != 32 || s.noise_std != 0.3 || s.seed != 7 ||
      cfg.train.epochs != 5) {
    return "desk config must use C=16, D=32, noise_std=0.3, seed 7 and 5 epochs";
  }
  return "";
}

}  // namespace
}  // namespace dcgn::acceptance

int main(int argc, char** argv) {
  using namespace dcgn;
  using namespace dcgn::acceptance;
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <desk config json>\n";
    return 2;
  }
  const RunConfig desk = load_run_config(argv[1]);
  testing::TempDir work("acceptance");

  int failures = 0;
  failures += !RunCriterion(1, "kts_exhaustive", 10, KtsMatchesEnumeration);
  failures += !RunCriterion(2, "gradcheck_three_seeds", 60, GradcheckSeeds);
  failures += !RunCriterion(3, "attention_equals_average", 1e9, AttentionReducesToAverage);
  failures += !RunCriterion(4, "shape_law", 1e9, ShapeLaw);
  failures += !RunCriterion(5, "gap_brute_force", 1e9, GapMatchesBruteForce);

  std::vector<std::string> attention_run;
  std::optional<Corpus> corpus;
  failures += !RunCriterion(6, "desk_ordering", 15 * 60, [&]() -> Outcome {
    if (std::string bad = CheckDeskConfig(desk); !bad.empty()) return {bad, ""};
    corpus = BuildCorpus(desk, work.path());
    attention_run = Train(desk, *corpus, ModelKind::kDcgn, Pooling::kAttention);
    const auto average_run = Train(desk, *corpus, ModelKind::kDcgn, Pooling::kAverage);
    const auto baseline_run = Train(desk, *corpus, ModelKind::kAverageBaseline, Pooling::kAverage);
    const double att = 100.0 * FinalGap(attention_run);
    const double avg = 100.0 * FinalGap(average_run);
    const double base = 100.0 * FinalGap(baseline_run);
    const std::string detail =
        Fmt("GAP attention %.2f, dcgn-average %.2f, average-baseline %.2f", att, avg, base);
    if (!(att >= base + 5.0)) return {"(a) margin over the baseline below 5 points", detail};
    if (!(att >= avg - 0.5)) return {"(b) attention trails dcgn-average by > 0.5", detail};
    return {"", detail};
  });

  failures += !RunCriterion(7, "overfit_fixed_batch", 1e9, [&]() -> Outcome {
    TrainConfig t = desk.train;
    std::vector<Example> examples;
    const Tensor protos = make_prototypes(desk.synth);
    for (std::size_t i = 0; i < 4; ++i) {
      SynthVideo v = synth_video(desk.synth, protos, i);
      examples.push_back(make_example(v.id, std::move(v.frames), v.labels, t.model));
    }
    t.model = resolve_model_config(t.model, examples);
    std::vector<const Example*> batch;
    for (const Example& e : examples) batch.push_back(&e);
    DcgnModel model = DcgnModel::Create(t.model);
    OptimizerState state = OptimizerState::For(model);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 200; ++step) {
      last = train_step(model, state, batch, t.base_lr, t);
      if (!std::isfinite(last)) return {"non-finite loss at step " + std::to_string(step), ""};
      if (step == 0) first = last;
    }
    const std::string detail =
        Fmt("loss %.4f -> %.4f (%.2f%% of initial)", first, last, 100.0 * last / first);
    if (!(last < 0.1 * first)) return {"loss not below 10%", detail};
    return {"", detail};
  });

  failures += !RunCriterion(8, "seeded_runs_identical", 15 * 60, [&]() -> Outcome {
    if (!corpus) return {"criterion 6 produced no corpus", ""};
    const Corpus again = BuildCorpus(desk, work / "again");
    const auto rerun = Train(desk, again, ModelKind::kDcgn, Pooling::kAttention);
    if (rerun != attention_run) {
      for (std::size_t i = 0; i < std::min(rerun.size(), attention_run.size()); ++i)
        if (rerun[i] != attention_run[i])
          return {"epoch report " + std::to_string(i) + " differs", ""};
      return {"report counts differ", ""};
    }
    return {"", std::to_string(rerun.size()) + " epoch reports bit-identical"};
  });

  failures += !RunCriterion(9, "lr_schedule", 1e9, []() -> Outcome {
    TrainConfig t;
    const double a = lr_schedule(0, t);
    const double b = lr_schedule(t.lr_decay_examples, t);
    const double c = lr_schedule(2 * t.lr_decay_examples, t);
    const std::string detail = Fmt("%.17g / %.17g / %.17g", a, b, c);
    if (a != 0.001 || b != 0.0008 || c != 0.00064) return {"values differ", detail};
    return {"", detail};
  });

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
