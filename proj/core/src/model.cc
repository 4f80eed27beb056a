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

#include "dcgn/model.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dcgn/errors.h"

namespace dcgn {
namespace {

Tensor Reshape(const Tensor& t, std::size_t rows, std::size_t cols) {
  return Tensor(rows, cols, std::vector<double>(t.values().begin(), t.values().end()));
}

}  // namespace

std::string to_string(ModelKind k) { return k == ModelKind::kDcgn ? "dcgn" : "average_baseline"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "dcgn") return ModelKind::kDcgn;
  if (s == "average_baseline") return ModelKind::kAverageBaseline;
  throw ParameterError("unknown model kind '" + s + "'");
}

void ModelConfig::validate() const {
  if (num_classes == 0) throw ParameterError("model.num_classes must be >= 1");
  if (feature_dim == 0) throw ParameterError("model.feature_dim must be >= 1");
  if (moe_mixtures == 0) throw ParameterError("model.moe_mixtures must be >= 1");
  if (!(loss.clip > 0.0 && loss.clip < 0.5)) {
    throw ParameterError("model.score_clip must be in (0, 0.5)");
  }
  if (kind == ModelKind::kAverageBaseline) return;
  if (filter_size == 0) throw ParameterError("model.filter_size must be >= 1");
  if (shots_m == 0) throw ParameterError("model.shots_m must be >= 1");
  if (k == 0) throw ParameterError("model.k must be >= 1");
  if (shot_kmax == 0) throw ParameterError("model.shot_kmax must be >= 1");
}

ModelGrads& ModelGrads::operator+=(const ModelGrads& o) {
  shot += o.shot;
  for (std::size_t l = 0; l < layers.size(); ++l) layers[l] += o.layers[l];
  moe += o.moe;
  return *this;
}

ModelGrads& ModelGrads::operator*=(double s) {
  shot.w_conv *= s;
  shot.w_prop *= s;
  for (LayerGrads& l : layers) {
    l.w_conv *= s;
    l.w_att *= s;
    l.b_att *= s;
    l.w_prop *= s;
  }
  moe.w_gate *= s;
  moe.b_gate *= s;
  moe.w_expert *= s;
  moe.b_expert *= s;
  return *this;
}

std::vector<const Tensor*> ModelGrads::flat() const {
  std::vector<const Tensor*> out;
  if (!shot.w_conv.empty()) {
    out.push_back(&shot.w_conv);
    out.push_back(&shot.w_prop);
  }
  for (const LayerGrads& l : layers) {
    out.insert(out.end(), {&l.w_conv, &l.w_att, &l.b_att, &l.w_prop});
  }
  out.insert(out.end(), {&moe.w_gate, &moe.b_gate, &moe.w_expert, &moe.b_expert});
  return out;
}

DcgnModel DcgnModel::Create(const ModelConfig& config) {
  config.validate();
  DcgnModel m;
  m.config = config;
  if (config.kind == ModelKind::kDcgn) {
    m.shot = ShotLayerParams::Create("shot", config.shot_kmax, config.feature_dim,
                                     config.filter_size, config.seed);
    for (std::size_t l = 0; l < config.layers; ++l) {
      m.layers.push_back(LayerParams::Create("layer" + std::to_string(l), config.k,
                                             config.filter_size, config.filter_size, config.seed));
    }
  }
  m.moe = MoEParams::Create("moe", m.representation_width(), config.num_classes,
                            config.moe_mixtures, config.seed);
  return m;
}

std::size_t DcgnModel::representation_width() const {
  if (config.kind == ModelKind::kAverageBaseline) return config.feature_dim;
  std::size_t nodes = config.shots_m;
  for (std::size_t l = 0; l < config.layers; ++l) nodes = pooled_count(nodes, config.k);
  return nodes * config.filter_size;
}

std::vector<ParamTensor*> DcgnModel::parameters() {
  std::vector<ParamTensor*> out;
  if (config.kind == ModelKind::kDcgn) {
    for (ParamTensor* p : shot.parameters()) out.push_back(p);
    for (LayerParams& l : layers)
      for (ParamTensor* p : l.parameters()) out.push_back(p);
  }
  for (ParamTensor* p : moe.parameters()) out.push_back(p);
  return out;
}

std::vector<const ParamTensor*> DcgnModel::parameters() const {
  auto mutable_params = const_cast<DcgnModel*>(this)->parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

ModelGrads DcgnModel::zero_grads() const {
  ModelGrads g;
  if (config.kind == ModelKind::kDcgn) {
    g.shot = ShotLayerGrads::ZerosLike(shot);
    for (const LayerParams& l : layers) g.layers.push_back(LayerGrads::ZerosLike(l));
  }
  g.moe = MoEGrads::ZerosLike(moe);
  return g;
}

void DcgnModel::set_grads(const ModelGrads& grads) {
  auto params = parameters();
  auto flat = grads.flat();
  if (params.size() != flat.size()) {
    throw DimensionError("set_grads: " + std::to_string(flat.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->value.same_shape(*flat[i])) {
      throw DimensionError("set_grads: shape mismatch for " + params[i]->name);
    }
    params[i]->grad = *flat[i];
  }
}

Tensor DcgnModel::represent(const Tensor& frames, const ShotBoundaries& shots,
                            ModelCache* cache) const {
  if (frames.cols() != config.feature_dim) {
    throw DimensionError("model expects " + std::to_string(config.feature_dim) +
                         "-dimensional frames, got " + frames.shape_string());
  }
  if (frames.rows() == 0) throw DimensionError("model input has no frames");
  if (config.kind == ModelKind::kAverageBaseline) {
    const Segment all{0, frames.rows()};
    return segment_mean(frames, std::span<const Segment>(&all, 1));
  }
  if (shots.m() != config.shots_m) {
    throw DimensionError("model expects " + std::to_string(config.shots_m) + " shots, got " +
                         std::to_string(shots.m()));
  }
  const LayerOutput first = shot_layer_forward(frames, shots, shot, config.activation, config.graph,
                                               cache ? &cache->shot : nullptr);
  if (layers.empty()) return Reshape(first.hidden, 1, first.hidden.size());
  return stack_forward(first.hidden, layers, config.layer_options(),
                       cache ? &cache->stack : nullptr);
}

Prediction DcgnModel::forward(const Tensor& frames, const ShotBoundaries& shots,
                              ModelCache* cache) const {
  const Tensor rep = represent(frames, shots, cache);
  return moe_forward(rep, moe, cache ? &cache->moe : nullptr);
}

void DcgnModel::backward(const Tensor& frames, const ModelCache& cache,
                         std::span<const double> d_scores, ModelGrads& grads) const {
  const Tensor d_rep = moe_backward(moe, cache.moe, d_scores, grads.moe);
  if (config.kind == ModelKind::kAverageBaseline) return;
  const Tensor& shot_hidden = cache.shot.output.hidden;
  Tensor d_shot_hidden = layers.empty() ? Reshape(d_rep, shot_hidden.rows(), shot_hidden.cols())
                                        : stack_backward(layers, config.layer_options(),
                                                         cache.stack, d_rep, grads.layers);
  shot_layer_backward(frames, shot, config.activation, config.graph, cache.shot, d_shot_hidden,
                      grads.shot);
}

Prediction baseline_average_forward(const Tensor& frames, const MoEParams& moe, MoECache* cache) {
  if (frames.rows() == 0) throw DimensionError("baseline: no frames");
  const Segment all{0, frames.rows()};
  return moe_forward(segment_mean(frames, std::span<const Segment>(&all, 1)), moe, cache);
}

// ---- Checkpoints ---------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'D', 'C', 'G', 'M'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }
  std::uint64_t get(int width) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(width)) {
      throw FormatError("checkpoint truncated", pos_);
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated", pos_);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(std::span<const NamedTensor> blocks) {
  std::string out(kCheckpointMagic, 4);
  PutU32(out, kCheckpointVersion);
  for (const NamedTensor& b : blocks) {
    PutU32(out, static_cast<std::uint32_t>(b.name.size()));
    out += b.name;
    PutU32(out, static_cast<std::uint32_t>(b.value.rows()));
    PutU32(out, static_cast<std::uint32_t>(b.value.cols()));
    for (double v : b.value.values()) PutU64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic", 0);
  }
  r.take(4);
  const auto version = r.get(4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  std::vector<NamedTensor> blocks;
  while (!r.done()) {
    NamedTensor b;
    const auto name_len = r.get(4);
    b.name = std::string(r.take(name_len));
    const auto rows = r.get(4);
    const auto cols = r.get(4);
    if (rows != 0 && cols > (bytes.size() - r.pos()) / 8 / rows) {
      throw FormatError("checkpoint block '" + b.name + "' exceeds file size", r.pos());
    }
    b.value = Tensor(rows, cols);
    for (double& v : b.value.values()) v = std::bit_cast<double>(r.get(8));
    blocks.push_back(std::move(b));
  }
  return blocks;
}

void save_checkpoint(const std::filesystem::path& path, const DcgnModel& model) {
  std::vector<NamedTensor> blocks;
  for (const ParamTensor* p : model.parameters()) blocks.push_back({p->name, p->value});
  const std::string bytes = encode_checkpoint(blocks);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, DcgnModel& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::vector<NamedTensor> blocks = decode_checkpoint(bytes);
  auto params = model.parameters();
  if (blocks.size() != params.size()) {
    throw CheckpointMismatchError("checkpoint has " + std::to_string(blocks.size()) +
                                  " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (blocks[i].name != params[i]->name || !blocks[i].value.same_shape(params[i]->value)) {
      throw CheckpointMismatchError("checkpoint tensor '" + blocks[i].name + "' " +
                                    blocks[i].value.shape_string() +
                                    " does not match model tensor '" + params[i]->name + "' " +
                                    params[i]->value.shape_string());
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i]->value = blocks[i].value;
    params[i]->zero_grad();
  }
}

}  // namespace dcgn
