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

#ifndef DCGN_METRICS_H_
#define DCGN_METRICS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dcgn {

inline constexpr std::size_t kDefaultTopN = 20;

struct ScoredClass {
  int class_id = 0;
  double confidence = 0.0;
};

struct ExamplePredictions {
  std::string id;
  std::vector<int> labels;       // ground-truth class set
  std::vector<ScoredClass> top;  // sorted by confidence, descending
};

struct PredictionSet {
  std::size_t top_n = kDefaultTopN;
  std::vector<ExamplePredictions> examples;

  // Throws ParameterError on: more than top_n pairs, non-finite confidence,
  // duplicate class within an example, or unsorted pairs.
  void validate() const;
};

// Keeps the top_n highest scores (ties: lower class id first).
ExamplePredictions make_example_predictions(std::string id, std::span<const double> scores,
                                            std::vector<int> labels,
                                            std::size_t top_n = kDefaultTopN);

// Global average precision: all examples' top-N pairs are ranked together by
// confidence (ties by example id, then class id) and precision is
// accumulated at each hit; the recall denominator is the total number of
// ground-truth labels, including those that never made a top-N list.
// Throws UndefinedMetricError when the set holds no ground-truth labels.
double gap(const PredictionSet& preds);

// Fraction of examples whose highest-confidence class is a ground-truth label.
double hit_at_1(const PredictionSet& preds);

}  // namespace dcgn

#endif  // DCGN_METRICS_H_
