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

#ifndef DCGN_SHOTS_H_
#define DCGN_SHOTS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcgn/layers.h"
#include "dcgn/tensor.h"

namespace dcgn {

// Partition of n frames into m = cuts.size() + 1 non-empty shots.
struct ShotBoundaries {
  std::size_t n = 0;
  std::vector<std::size_t> cuts;  // strictly increasing, each in (0, n)

  std::size_t m() const { return cuts.size() + 1; }
  std::vector<Segment> segments() const;
  // Throws ParameterError if the cuts are not strictly increasing in (0, n).
  void validate() const;
};

// Within-segment scatter Σ‖f_t − μ‖² for every segment [i, j) of a sequence,
// computed from prefix sums of f and ‖f‖².
class SegmentCostTable {
 public:
  explicit SegmentCostTable(const Tensor& features);

  std::size_t n() const { return n_; }
  // Requires 0 <= i < j <= n.
  double cost(std::size_t i, std::size_t j) const { return table_[i * (n_ + 1) + j]; }

 private:
  std::size_t n_;
  std::vector<double> table_;
};

SegmentCostTable segment_costs(const Tensor& features);

struct KtsResult {
  ShotBoundaries boundaries;
  double cost = 0.0;       // Σ segment costs
  double objective = 0.0;  // cost + c·g(m, n); equals cost for kts_fixed
};

// Exact minimum-cost partition into m segments. Among optimal partitions the
// lexicographically smallest cut sequence is returned.
KtsResult kts_fixed(const SegmentCostTable& costs, std::size_t m);

// g(m, n) = m (ln(n/m) + 1).
double kts_penalty(std::size_t m, std::size_t n);

// Picks m in [1, m_max] minimizing cost(m) + c_penalty·g(m, n); ties go to
// the smaller m.
KtsResult kts_auto(const SegmentCostTable& costs, double c_penalty, std::size_t m_max);

// Unclamped frame-to-frame cosine similarity, for inspection.
Tensor frame_similarity(const Tensor& frames);

// ---- Shot-aided first layer ----------------------------------------------

struct ShotLayerParams {
  std::size_t k_max = 1;  // frames per shot seen by the convolution
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  ParamTensor w_conv;  // (k_max·d_in) × d_out
  ParamTensor w_prop;  // d_out × d_out

  static ShotLayerParams Create(const std::string& prefix, std::size_t k_max, std::size_t d_in,
                                std::size_t d_out, std::uint64_t seed);
  std::vector<ParamTensor*> parameters();
  void validate() const;
};

struct ShotLayerGrads {
  Tensor w_conv, w_prop;
  static ShotLayerGrads ZerosLike(const ShotLayerParams& p);
  ShotLayerGrads& operator+=(const ShotLayerGrads& o);
};

struct ShotLayerCache {
  LayerOutput output;
  PropagateCache propagate;
  std::vector<Segment> segments;
};

// Pools each shot to its mean frame, convolves each shot's first k_max
// frames (zero-padded when shorter), then propagates over the shot graph.
LayerOutput shot_layer_forward(const Tensor& frames, const ShotBoundaries& boundaries,
                               const ShotLayerParams& params, Activation activation,
                               const GraphOptions& graph = {}, ShotLayerCache* cache = nullptr);

// Frames are data, so only parameter gradients are produced.
void shot_layer_backward(const Tensor& frames, const ShotLayerParams& params, Activation activation,
                         const GraphOptions& graph, const ShotLayerCache& cache,
                         const Tensor& d_hidden, ShotLayerGrads& grads);

}  // namespace dcgn

#endif  // DCGN_SHOTS_H_
