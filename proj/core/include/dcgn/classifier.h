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

#ifndef DCGN_CLASSIFIER_H_
#define DCGN_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dcgn/tensor.h"

namespace dcgn {

// Per-class mixture of E sigmoid experts with a per-class softmax gate.
// Column c·E + e of the weight matrices belongs to class c, expert e.
struct MoEParams {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t num_experts = 1;
  ParamTensor w_gate;    // input_dim × (C·E)
  ParamTensor b_gate;    // 1 × (C·E)
  ParamTensor w_expert;  // input_dim × (C·E)
  ParamTensor b_expert;  // 1 × (C·E)

  static MoEParams Create(const std::string& prefix, std::size_t input_dim, std::size_t num_classes,
                          std::size_t num_experts, std::uint64_t seed);
  std::vector<ParamTensor*> parameters();
  void validate() const;
};

struct MoEGrads {
  Tensor w_gate, b_gate, w_expert, b_expert;
  static MoEGrads ZerosLike(const MoEParams& p);
  MoEGrads& operator+=(const MoEGrads& o);
};

// Independent per-class scores in [0, 1].
struct Prediction {
  std::vector<double> scores;
};

struct MoECache {
  Tensor input;
  Tensor gate;    // softmax over each class's E logits
  Tensor expert;  // sigmoid outputs
};

Prediction moe_forward(const Tensor& h, const MoEParams& params, MoECache* cache = nullptr);

// Returns dL/dh; parameter gradients accumulate into `grads`.
Tensor moe_backward(const MoEParams& params, const MoECache& cache,
                    std::span<const double> d_scores, MoEGrads& grads);

enum class LossKind {
  kBinary,       // −Σ_c [y log p + (1−y) log(1−p)]
  kCategorical,  // −Σ_c y log p
};

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct LossOptions {
  LossKind kind = LossKind::kBinary;
  double clip = 1e-6;  // scores are clipped to [clip, 1 − clip]
};

// Multi-hot vector of length num_classes. Throws ParameterError on an
// out-of-range label.
std::vector<double> multi_hot(std::span<const int> labels, std::size_t num_classes);

double multilabel_loss(const Prediction& pred, std::span<const int> labels,
                       const LossOptions& options = {});
// dLoss/dscores. Zero where the clip is active.
std::vector<double> multilabel_loss_grad(const Prediction& pred, std::span<const int> labels,
                                         const LossOptions& options = {});

}  // namespace dcgn

#endif  // DCGN_CLASSIFIER_H_
