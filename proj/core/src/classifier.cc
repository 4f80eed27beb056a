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

#include "dcgn/classifier.h"

#include <algorithm>
#include <cmath>

#include "dcgn/errors.h"
#include "dcgn/layers.h"

namespace dcgn {

MoEParams MoEParams::Create(const std::string& prefix, std::size_t input_dim,
                            std::size_t num_classes, std::size_t num_experts, std::uint64_t seed) {
  if (input_dim == 0 || num_classes == 0 || num_experts == 0) {
    throw ParameterError("MoEParams: input_dim, num_classes, num_experts must be >= 1");
  }
  const std::size_t width = num_classes * num_experts;
  MoEParams p;
  p.input_dim = input_dim;
  p.num_classes = num_classes;
  p.num_experts = num_experts;
  p.w_gate =
      ParamTensor(prefix + ".w_gate", glorot_uniform(input_dim, width, seed, prefix + ".w_gate"));
  p.b_gate = ParamTensor(prefix + ".b_gate", Tensor(1, width));
  p.w_expert = ParamTensor(prefix + ".w_expert",
                           glorot_uniform(input_dim, width, seed, prefix + ".w_expert"));
  p.b_expert = ParamTensor(prefix + ".b_expert", Tensor(1, width));
  return p;
}

std::vector<ParamTensor*> MoEParams::parameters() {
  return {&w_gate, &b_gate, &w_expert, &b_expert};
}

void MoEParams::validate() const {
  const std::size_t width = num_classes * num_experts;
  auto check = [&](const ParamTensor& t, std::size_t r) {
    if (t.value.rows() != r || t.value.cols() != width) {
      throw DimensionError(t.name + ": expected (" + std::to_string(r) + "x" +
                           std::to_string(width) + "), got " + t.value.shape_string());
    }
  };
  if (num_experts == 0) throw ParameterError("MoEParams: num_experts must be >= 1");
  check(w_gate, input_dim);
  check(b_gate, 1);
  check(w_expert, input_dim);
  check(b_expert, 1);
}

MoEGrads MoEGrads::ZerosLike(const MoEParams& p) {
  const std::size_t width = p.num_classes * p.num_experts;
  return {Tensor(p.input_dim, width), Tensor(1, width), Tensor(p.input_dim, width),
          Tensor(1, width)};
}

MoEGrads& MoEGrads::operator+=(const MoEGrads& o) {
  w_gate += o.w_gate;
  b_gate += o.b_gate;
  w_expert += o.w_expert;
  b_expert += o.b_expert;
  return *this;
}

Prediction moe_forward(const Tensor& h, const MoEParams& params, MoECache* cache) {
  if (h.rows() != 1 || h.cols() != params.input_dim) {
    throw DimensionError("moe_forward: input " + h.shape_string() + " does not match (1x" +
                         std::to_string(params.input_dim) + ")");
  }
  const std::size_t classes = params.num_classes;
  const std::size_t experts = params.num_experts;
  Tensor gate_logits = matmul(h, params.w_gate.value) + params.b_gate.value;
  Tensor expert =
      activate(matmul(h, params.w_expert.value) + params.b_expert.value, Activation::kSigmoid);
  // Softmax within each class's block of E logits.
  Tensor gate = row_softmax(
      Tensor(classes, experts,
             std::vector<double>(gate_logits.values().begin(), gate_logits.values().end())));
  Prediction pred;
  pred.scores.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    double p = 0.0;
    for (std::size_t e = 0; e < experts; ++e) p += gate(c, e) * expert[c * experts + e];
    pred.scores[c] = p;
  }
  if (cache != nullptr) {
    cache->input = h;
    cache->gate = std::move(gate);
    cache->expert = std::move(expert);
  }
  return pred;
}

Tensor moe_backward(const MoEParams& params, const MoECache& cache,
                    std::span<const double> d_scores, MoEGrads& grads) {
  const std::size_t classes = params.num_classes;
  const std::size_t experts = params.num_experts;
  if (d_scores.size() != classes) {
    throw DimensionError("moe_backward: " + std::to_string(d_scores.size()) +
                         " score gradients for " + std::to_string(classes) + " classes");
  }
  Tensor d_gate_logits(1, classes * experts);
  Tensor d_expert_logits(1, classes * experts);
  for (std::size_t c = 0; c < classes; ++c) {
    double dot = 0.0;
    for (std::size_t e = 0; e < experts; ++e) {
      const std::size_t idx = c * experts + e;
      const double s = cache.expert[idx];
      const double g = cache.gate(c, e);
      d_expert_logits[idx] = d_scores[c] * g * s * (1.0 - s);
      dot += g * d_scores[c] * s;
    }
    for (std::size_t e = 0; e < experts; ++e) {
      const std::size_t idx = c * experts + e;
      const double g = cache.gate(c, e);
      d_gate_logits[idx] = g * (d_scores[c] * cache.expert[idx] - dot);
    }
  }
  grads.w_gate += matmul_tn(cache.input, d_gate_logits);
  grads.b_gate += d_gate_logits;
  grads.w_expert += matmul_tn(cache.input, d_expert_logits);
  grads.b_expert += d_expert_logits;
  return matmul_nt(d_gate_logits, params.w_gate.value) +
         matmul_nt(d_expert_logits, params.w_expert.value);
}

std::string to_string(LossKind k) { return k == LossKind::kBinary ? "binary" : "categorical"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "binary") return LossKind::kBinary;
  if (s == "categorical") return LossKind::kCategorical;
  throw ParameterError("unknown loss '" + s + "'");
}

std::vector<double> multi_hot(std::span<const int> labels, std::size_t num_classes) {
  std::vector<double> y(num_classes, 0.0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw ParameterError("label " + std::to_string(l) + " outside [0, " +
                           std::to_string(num_classes) + ")");
    }
    y[static_cast<std::size_t>(l)] = 1.0;
  }
  return y;
}

double multilabel_loss(const Prediction& pred, std::span<const int> labels,
                       const LossOptions& options) {
  const std::vector<double> y = multi_hot(labels, pred.scores.size());
  double loss = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double p = std::clamp(pred.scores[c], options.clip, 1.0 - options.clip);
    loss -= y[c] * std::log(p);
    if (options.kind == LossKind::kBinary) loss -= (1.0 - y[c]) * std::log(1.0 - p);
  }
  return loss;
}

std::vector<double> multilabel_loss_grad(const Prediction& pred, std::span<const int> labels,
                                         const LossOptions& options) {
  const std::vector<double> y = multi_hot(labels, pred.scores.size());
  std::vector<double> grad(y.size(), 0.0);
  for (std::size_t c = 0; c < y.size(); ++c) {
    const double raw = pred.scores[c];
    if (raw < options.clip || raw > 1.0 - options.clip) continue;
    grad[c] = -y[c] / raw;
    if (options.kind == LossKind::kBinary) grad[c] += (1.0 - y[c]) / (1.0 - raw);
  }
  return grad;
}

}  // namespace dcgn
