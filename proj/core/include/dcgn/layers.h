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

#ifndef DCGN_LAYERS_H_
#define DCGN_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcgn/graph.h"
#include "dcgn/tensor.h"

namespace dcgn {

enum class Pooling { kAverage, kAttention };

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);

// Half-open row range [begin, end).
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
};

// Consecutive windows of k rows over n rows; the last one may be short.
std::vector<Segment> fixed_windows(std::size_t n, std::size_t k);

// ⌈n / k⌉.
std::size_t pooled_count(std::size_t n, std::size_t k);

// Glorot-uniform matrix, deterministic in (seed, name).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      const std::string& name);

struct LayerOptions {
  Pooling pooling = Pooling::kAttention;
  Activation activation = Activation::kSigmoid;
  GraphOptions graph;
};

// Parameters of one pooling/convolution/propagation layer.
struct LayerParams {
  std::size_t k = 1;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  ParamTensor w_conv;  // (k·d_in) × d_out
  ParamTensor w_att;   // d_in × 1
  ParamTensor b_att;   // 1 × 1
  ParamTensor w_prop;  // d_out × d_out

  // Glorot init for w_conv/w_prop. The attention weights start at zero so
  // attention pooling initially coincides with average pooling.
  static LayerParams Create(const std::string& prefix, std::size_t k, std::size_t d_in,
                            std::size_t d_out, std::uint64_t seed);
  std::vector<ParamTensor*> parameters();
  void validate() const;
};

struct LayerGrads {
  Tensor w_conv, w_att, b_att, w_prop;
  static LayerGrads ZerosLike(const LayerParams& p);
  LayerGrads& operator+=(const LayerGrads& o);
};

struct LayerOutput {
  Tensor pooled;     // M × d_in
  Tensor convolved;  // M × d_out
  Tensor hidden;     // M × d_out
};

// ---- Pooling -------------------------------------------------------------

Tensor segment_mean(const Tensor& h, std::span<const Segment> segments);
Tensor segment_mean_backward(const Tensor& d_pooled, std::size_t n,
                             std::span<const Segment> segments);

Tensor average_pool(const Tensor& h, std::size_t k);

// Per window: α = softmax(slice·w_att + b_att), output = αᵀ·slice.
Tensor attention_pool(const Tensor& h, std::size_t k, const Tensor& w_att, double b_att);
// Returns dL/dh and accumulates into d_w_att / d_b_att.
Tensor attention_pool_backward(const Tensor& h, std::size_t k, const Tensor& w_att, double b_att,
                               const Tensor& d_pooled, Tensor& d_w_att, double& d_b_att);

// ---- Node convolution ----------------------------------------------------

// Each segment's rows are flattened into one (width·D) row, truncated or
// zero-padded to `width` rows, and multiplied by w_conv.
Tensor segment_convolve(const Tensor& h, std::span<const Segment> segments, std::size_t width,
                        const Tensor& w_conv);
Tensor segment_convolve_backward(const Tensor& h, std::span<const Segment> segments,
                                 std::size_t width, const Tensor& w_conv, const Tensor& d_conv,
                                 Tensor& d_w_conv);

Tensor node_convolve(const Tensor& h, std::size_t k, const Tensor& w_conv);

// ---- Propagation ---------------------------------------------------------

struct PropagateCache {
  AffinityMatrix affinity;
  Tensor normalized;
  Tensor projected;  // convolved · w_prop
  Tensor hidden;
};

// activation(norm(affinity(pooled)) · convolved · w_prop).
Tensor propagate(const Tensor& pooled, const Tensor& convolved, const Tensor& w_prop,
                 Activation activation, const GraphOptions& graph = {},
                 PropagateCache* cache = nullptr);

struct PropagateInputGrads {
  Tensor d_pooled;
  Tensor d_convolved;
};

PropagateInputGrads propagate_backward(const Tensor& pooled, const Tensor& convolved,
                                       const Tensor& w_prop, Activation activation,
                                       const GraphOptions& graph, const PropagateCache& cache,
                                       const Tensor& d_hidden, Tensor& d_w_prop);

// ---- Layers --------------------------------------------------------------

struct LayerCache {
  LayerOutput output;
  PropagateCache propagate;
};

LayerOutput layer_forward(const Tensor& h_prev, const LayerParams& params,
                          const LayerOptions& options, LayerCache* cache = nullptr);

// Returns dL/dh_prev; parameter gradients accumulate into `grads`.
Tensor layer_backward(const Tensor& h_prev, const LayerParams& params, const LayerOptions& options,
                      const LayerCache& cache, const Tensor& d_hidden, LayerGrads& grads);

struct StackCache {
  std::vector<Tensor> inputs;  // input to each layer
  std::vector<LayerCache> layers;
};

// Node count after each layer, starting from n input nodes.
std::vector<std::size_t> stack_node_counts(std::size_t n, std::span<const LayerParams> layers);

// Runs the layers in order and flattens the last hidden matrix row-major
// into a single 1 × (M_L·d_out) row.
Tensor stack_forward(const Tensor& h0, std::span<const LayerParams> layers,
                     const LayerOptions& options, StackCache* cache = nullptr);

Tensor stack_backward(std::span<const LayerParams> layers, const LayerOptions& options,
                      const StackCache& cache, const Tensor& d_flat, std::span<LayerGrads> grads);

}  // namespace dcgn

#endif  // DCGN_LAYERS_H_
