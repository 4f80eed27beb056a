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

#include "dcgn/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "dcgn/errors.h"

namespace dcgn {

void PredictionSet::validate() const {
  for (const ExamplePredictions& ex : examples) {
    if (ex.top.size() > top_n) {
      throw ParameterError("example '" + ex.id + "' has " + std::to_string(ex.top.size()) +
                           " predictions, limit " + std::to_string(top_n));
    }
    std::set<int> seen;
    for (std::size_t i = 0; i < ex.top.size(); ++i) {
      const ScoredClass& sc = ex.top[i];
      if (!std::isfinite(sc.confidence)) {
        throw ParameterError("example '" + ex.id + "': non-finite confidence");
      }
      if (!seen.insert(sc.class_id).second) {
        throw ParameterError("example '" + ex.id + "': duplicate class " +
                             std::to_string(sc.class_id));
      }
      if (i > 0 && sc.confidence > ex.top[i - 1].confidence) {
        throw ParameterError("example '" + ex.id + "': predictions not sorted");
      }
    }
  }
}

ExamplePredictions make_example_predictions(std::string id, std::span<const double> scores,
                                            std::vector<int> labels, std::size_t top_n) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  if (order.size() > top_n) order.resize(top_n);
  ExamplePredictions ex;
  ex.id = std::move(id);
  ex.labels = std::move(labels);
  for (int c : order) ex.top.push_back({c, scores[c]});
  return ex;
}

double gap(const PredictionSet& preds) {
  preds.validate();
  struct Entry {
    double confidence;
    const std::string* id;
    int class_id;
    bool hit;
  };
  std::vector<Entry> pool;
  std::size_t positives = 0;
  for (const ExamplePredictions& ex : preds.examples) {
    const std::set<int> truth(ex.labels.begin(), ex.labels.end());
    positives += truth.size();
    for (const ScoredClass& sc : ex.top) {
      pool.push_back({sc.confidence, &ex.id, sc.class_id, truth.count(sc.class_id) > 0});
    }
  }
  if (positives == 0) throw UndefinedMetricError("GAP undefined: no ground-truth labels");
  std::sort(pool.begin(), pool.end(), [](const Entry& a, const Entry& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return std::tie(*a.id, a.class_id) < std::tie(*b.id, b.class_id);
  });
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool[i].hit) continue;
    ++hits;
    ap += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return ap / static_cast<double>(positives);
}

double hit_at_1(const PredictionSet& preds) {
  preds.validate();
  if (preds.examples.empty()) throw UndefinedMetricError("Hit@1 undefined: no examples");
  std::size_t hits = 0;
  for (const ExamplePredictions& ex : preds.examples) {
    if (ex.top.empty()) {
      throw ParameterError("example '" + ex.id + "' has no predictions");
    }
    const int best = ex.top.front().class_id;
    if (std::find(ex.labels.begin(), ex.labels.end(), best) != ex.labels.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.examples.size());
}

}  // namespace dcgn
