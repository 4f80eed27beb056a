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

#ifndef DCGN_MODEL_H_
#define DCGN_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcgn/classifier.h"
#include "dcgn/graph.h"
#include "dcgn/layers.h"
#include "dcgn/shots.h"
#include "dcgn/tensor.h"

namespace dcgn {

enum class ModelKind {
  kDcgn,             // shot layer → stacked layers → MoE
  kAverageBaseline,  // mean of all frames → MoE
};

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::kDcgn;
  std::size_t num_classes = 16;
  std::size_t feature_dim = 0;  // taken from the data when 0
  std::size_t layers = 5;       // stacked layers after the shot layer
  std::size_t filter_size = 64;
  std::size_t moe_mixtures = 2;
  Pooling pooling = Pooling::kAttention;
  Activation activation = Activation::kSigmoid;
  GraphOptions graph;
  std::size_t shots_m = 16;
  std::size_t k = 2;
  std::size_t shot_kmax = 0;  // derived from the training set when 0
  LossOptions loss;
  std::uint64_t seed = 1;

  void validate() const;  // requires feature_dim and shot_kmax resolved
  LayerOptions layer_options() const { return {pooling, activation, graph}; }
};

struct ModelGrads {
  ShotLayerGrads shot;
  std::vector<LayerGrads> layers;
  MoEGrads moe;

  ModelGrads& operator+=(const ModelGrads& o);
  ModelGrads& operator*=(double s);
  // Same order as DcgnModel::parameters().
  std::vector<const Tensor*> flat() const;
};

struct ModelCache {
  ShotLayerCache shot;
  StackCache stack;
  MoECache moe;
};

struct DcgnModel {
  ModelConfig config;
  ShotLayerParams shot;
  std::vector<LayerParams> layers;
  MoEParams moe;

  static DcgnModel Create(const ModelConfig& config);

  // Width of the video-level representation fed to the MoE head.
  std::size_t representation_width() const;

  // Fixed order: shot layer, stacked layers, MoE. The baseline has only MoE.
  std::vector<ParamTensor*> parameters();
  std::vector<const ParamTensor*> parameters() const;

  ModelGrads zero_grads() const;
  // Copies `grads` into each ParamTensor's grad.
  void set_grads(const ModelGrads& grads);

  // Video-level representation (H^L, or the mean frame for the baseline).
  Tensor represent(const Tensor& frames, const ShotBoundaries& shots,
                   ModelCache* cache = nullptr) const;
  Prediction forward(const Tensor& frames, const ShotBoundaries& shots,
                     ModelCache* cache = nullptr) const;
  // Accumulates dL/dparams for one example into `grads`.
  void backward(const Tensor& frames, const ModelCache& cache, std::span<const double> d_scores,
                ModelGrads& grads) const;
};

// Mean of all frames fed to the MoE head.
Prediction baseline_average_forward(const Tensor& frames, const MoEParams& moe,
                                    MoECache* cache = nullptr);

// ---- Checkpoints ---------------------------------------------------------
// Little-endian: magic "DCGM", u32 version, then until EOF a sequence of
// blocks {u32 name length, name bytes, u32 rows, u32 cols, f64 values}.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

std::string encode_checkpoint(std::span<const NamedTensor> blocks);
std::vector<NamedTensor> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const DcgnModel& model);
// Loads parameter values into `model`. Throws CheckpointMismatchError if the
// names or shapes differ from the model's.
void load_checkpoint(const std::filesystem::path& path, DcgnModel& model);

}  // namespace dcgn

#endif  // DCGN_MODEL_H_
