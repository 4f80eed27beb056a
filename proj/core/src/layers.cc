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

#include "dcgn/layers.h"

#include <algorithm>
#include <cmath>

#include "dcgn/errors.h"
#include "dcgn/rng.h"

namespace dcgn {

std::string to_string(Pooling p) { return p == Pooling::kAverage ? "average" : "attention"; }

Pooling pooling_from_string(const std::string& s) {
  if (s == "average") return Pooling::kAverage;
  if (s == "attention") return Pooling::kAttention;
  throw ParameterError("unknown pooling '" + s + "'");
}

std::size_t pooled_count(std::size_t n, std::size_t k) {
  if (k == 0) throw ParameterError("pooling kernel size must be >= 1");
  return (n + k - 1) / k;
}

std::vector<Segment> fixed_windows(std::size_t n, std::size_t k) {
  const std::size_t m = pooled_count(n, k);
  std::vector<Segment> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = {i * k, std::min((i + 1) * k, n)};
  return out;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed,
                      const std::string& name) {
  SplitMix64 rng(derive_seed(seed, name));
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (double& v : t.values()) v = rng.uniform(-limit, limit);
  return t;
}

LayerParams LayerParams::Create(const std::string& prefix, std::size_t k, std::size_t d_in,
                                std::size_t d_out, std::uint64_t seed) {
  if (k == 0 || d_in == 0 || d_out == 0) {
    throw ParameterError("LayerParams: k, d_in, d_out must be >= 1");
  }
  LayerParams p;
  p.k = k;
  p.d_in = d_in;
  p.d_out = d_out;
  p.w_conv =
      ParamTensor(prefix + ".w_conv", glorot_uniform(k * d_in, d_out, seed, prefix + ".w_conv"));
  p.w_att = ParamTensor(prefix + ".w_att", Tensor(d_in, 1));
  p.b_att = ParamTensor(prefix + ".b_att", Tensor(1, 1));
  p.w_prop =
      ParamTensor(prefix + ".w_prop", glorot_uniform(d_out, d_out, seed, prefix + ".w_prop"));
  return p;
}

std::vector<ParamTensor*> LayerParams::parameters() { return {&w_conv, &w_att, &b_att, &w_prop}; }

void LayerParams::validate() const {
  auto check = [](const ParamTensor& t, std::size_t r, std::size_t c) {
    if (t.value.rows() != r || t.value.cols() != c || !t.grad.same_shape(t.value)) {
      throw DimensionError(t.name + ": expected (" + std::to_string(r) + "x" + std::to_string(c) +
                           "), got " + t.value.shape_string());
    }
  };
  if (k == 0) throw ParameterError("LayerParams: k must be >= 1");
  check(w_conv, k * d_in, d_out);
  check(w_att, d_in, 1);
  check(b_att, 1, 1);
  check(w_prop, d_out, d_out);
}

LayerGrads LayerGrads::ZerosLike(const LayerParams& p) {
  return {Tensor(p.w_conv.value.rows(), p.w_conv.value.cols()),
          Tensor(p.w_att.value.rows(), p.w_att.value.cols()), Tensor(1, 1),
          Tensor(p.w_prop.value.rows(), p.w_prop.value.cols())};
}

LayerGrads& LayerGrads::operator+=(const LayerGrads& o) {
  w_conv += o.w_conv;
  w_att += o.w_att;
  b_att += o.b_att;
  w_prop += o.w_prop;
  return *this;
}

Tensor segment_mean(const Tensor& h, std::span<const Segment> segments) {
  Tensor out(segments.size(), h.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    auto o = out.row(s);
    for (std::size_t r = seg.begin; r < seg.end; ++r) {
      auto in = h.row(r);
      for (std::size_t d = 0; d < o.size(); ++d) o[d] += in[d];
    }
    const double inv = 1.0 / static_cast<double>(seg.length());
    for (double& v : o) v *= inv;
  }
  return out;
}

Tensor segment_mean_backward(const Tensor& d_pooled, std::size_t n,
                             std::span<const Segment> segments) {
  Tensor d_h(n, d_pooled.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    const double inv = 1.0 / static_cast<double>(seg.length());
    auto g = d_pooled.row(s);
    for (std::size_t r = seg.begin; r < seg.end; ++r) {
      auto o = d_h.row(r);
      for (std::size_t d = 0; d < o.size(); ++d) o[d] += g[d] * inv;
    }
  }
  return d_h;
}

Tensor average_pool(const Tensor& h, std::size_t k) {
  const auto windows = fixed_windows(h.rows(), k);
  return segment_mean(h, windows);
}

namespace {

void RequireAttentionShapes(const Tensor& h, const Tensor& w_att) {
  if (w_att.rows() != h.cols() || w_att.cols() != 1) {
    throw DimensionError("attention_pool: w_att " + w_att.shape_string() + " does not fit input " +
                         h.shape_string());
  }
}

// Softmax weights of the rows of one window.
std::vector<double> WindowWeights(const Tensor& h, Segment seg, const Tensor& w_att, double b_att) {
  std::vector<double> alpha(seg.length());
  double mx = -INFINITY;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    auto r = h.row(seg.begin + j);
    double s = b_att;
    for (std::size_t d = 0; d < r.size(); ++d) s += r[d] * w_att[d];
    alpha[j] = s;
    mx = std::max(mx, s);
  }
  double sum = 0.0;
  for (double& a : alpha) {
    a = std::exp(a - mx);
    sum += a;
  }
  for (double& a : alpha) a /= sum;
  return alpha;
}

}  // namespace

Tensor attention_pool(const Tensor& h, std::size_t k, const Tensor& w_att, double b_att) {
  RequireAttentionShapes(h, w_att);
  const auto windows = fixed_windows(h.rows(), k);
  Tensor out(windows.size(), h.cols());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto alpha = WindowWeights(h, windows[i], w_att, b_att);
    auto o = out.row(i);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      auto r = h.row(windows[i].begin + j);
      for (std::size_t d = 0; d < o.size(); ++d) o[d] += alpha[j] * r[d];
    }
  }
  return out;
}

Tensor attention_pool_backward(const Tensor& h, std::size_t k, const Tensor& w_att, double b_att,
                               const Tensor& d_pooled, Tensor& d_w_att, double& d_b_att) {
  RequireAttentionShapes(h, w_att);
  const auto windows = fixed_windows(h.rows(), k);
  const std::size_t dim = h.cols();
  Tensor d_h(h.rows(), dim);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Segment seg = windows[i];
    const auto alpha = WindowWeights(h, seg, w_att, b_att);
    auto g = d_pooled.row(i);
    // dα_j = g · h_j, then through the softmax.
    std::vector<double> d_alpha(alpha.size());
    double dot = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      auto r = h.row(seg.begin + j);
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += g[d] * r[d];
      d_alpha[j] = s;
      dot += alpha[j] * s;
    }
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      const double d_score = alpha[j] * (d_alpha[j] - dot);
      auto r = h.row(seg.begin + j);
      auto dr = d_h.row(seg.begin + j);
      for (std::size_t d = 0; d < dim; ++d) {
        dr[d] += alpha[j] * g[d] + d_score * w_att[d];
        d_w_att[d] += d_score * r[d];
      }
      d_b_att += d_score;
    }
  }
  return d_h;
}

Tensor segment_convolve(const Tensor& h, std::span<const Segment> segments, std::size_t width,
                        const Tensor& w_conv) {
  const std::size_t dim = h.cols();
  if (w_conv.rows() != width * dim) {
    throw DimensionError("node convolution: kernel " + w_conv.shape_string() +
                         " does not fit window of " + std::to_string(width) + " rows of input " +
                         h.shape_string());
  }
  Tensor out(segments.size(), w_conv.cols());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    const std::size_t used = std::min(seg.length(), width);
    auto o = out.row(s);
    // Padding rows are zero and contribute nothing.
    for (std::size_t j = 0; j < used; ++j) {
      auto r = h.row(seg.begin + j);
      for (std::size_t d = 0; d < dim; ++d) {
        const double x = r[d];
        if (x == 0.0) continue;
        auto w = w_conv.row(j * dim + d);
        for (std::size_t c = 0; c < o.size(); ++c) o[c] += x * w[c];
      }
    }
  }
  return out;
}

Tensor segment_convolve_backward(const Tensor& h, std::span<const Segment> segments,
                                 std::size_t width, const Tensor& w_conv, const Tensor& d_conv,
                                 Tensor& d_w_conv) {
  const std::size_t dim = h.cols();
  Tensor d_h(h.rows(), dim);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment seg = segments[s];
    const std::size_t used = std::min(seg.length(), width);
    auto g = d_conv.row(s);
    for (std::size_t j = 0; j < used; ++j) {
      auto r = h.row(seg.begin + j);
      auto dr = d_h.row(seg.begin + j);
      for (std::size_t d = 0; d < dim; ++d) {
        auto w = w_conv.row(j * dim + d);
        auto dw = d_w_conv.row(j * dim + d);
        double acc = 0.0;
        for (std::size_t c = 0; c < g.size(); ++c) {
          acc += g[c] * w[c];
          dw[c] += r[d] * g[c];
        }
        dr[d] += acc;
      }
    }
  }
  return d_h;
}

Tensor node_convolve(const Tensor& h, std::size_t k, const Tensor& w_conv) {
  const auto windows = fixed_windows(h.rows(), k);
  return segment_convolve(h, windows, k, w_conv);
}

Tensor propagate(const Tensor& pooled, const Tensor& convolved, const Tensor& w_prop,
                 Activation activation, const GraphOptions& graph, PropagateCache* cache) {
  if (pooled.rows() != convolved.rows()) {
    throw DimensionError("propagate: pooled " + pooled.shape_string() + " and convolved " +
                         convolved.shape_string() + " differ in node count");
  }
  AffinityMatrix affinity = build_affinity(pooled, graph.clamp_negative);
  Tensor normalized = normalize_adjacency(affinity, graph.norm);
  Tensor projected = matmul(convolved, w_prop);
  Tensor hidden = activate(matmul(normalized, projected), activation);
  if (cache != nullptr) {
    cache->affinity = std::move(affinity);
    cache->normalized = std::move(normalized);
    cache->projected = std::move(projected);
    cache->hidden = hidden;
  }
  return hidden;
}

PropagateInputGrads propagate_backward(const Tensor& pooled, const Tensor& convolved,
                                       const Tensor& w_prop, Activation activation,
                                       const GraphOptions& graph, const PropagateCache& cache,
                                       const Tensor& d_hidden, Tensor& d_w_prop) {
  const Tensor d_pre = activate_backward(cache.hidden, d_hidden, activation);
  const Tensor d_normalized = matmul_nt(d_pre, cache.projected);
  const Tensor d_projected = matmul_tn(cache.normalized, d_pre);
  d_w_prop += matmul_tn(convolved, d_projected);
  PropagateInputGrads out;
  out.d_convolved = matmul_nt(d_projected, w_prop);
  const Tensor d_affinity = normalize_adjacency_backward(cache.affinity, graph.norm, d_normalized);
  out.d_pooled = build_affinity_backward(pooled, cache.affinity, d_affinity, graph.clamp_negative);
  return out;
}

LayerOutput layer_forward(const Tensor& h_prev, const LayerParams& params,
                          const LayerOptions& options, LayerCache* cache) {
  if (h_prev.cols() != params.d_in) {
    throw DimensionError("layer_forward: input " + h_prev.shape_string() + " does not match d_in " +
                         std::to_string(params.d_in));
  }
  if (h_prev.rows() == 0) throw DimensionError("layer_forward: empty input");
  LayerOutput out;
  out.pooled = options.pooling == Pooling::kAverage
                   ? average_pool(h_prev, params.k)
                   : attention_pool(h_prev, params.k, params.w_att.value, params.b_att.value[0]);
  out.convolved = node_convolve(h_prev, params.k, params.w_conv.value);
  PropagateCache* pc = cache != nullptr ? &cache->propagate : nullptr;
  out.hidden = propagate(out.pooled, out.convolved, params.w_prop.value, options.activation,
                         options.graph, pc);
  if (cache != nullptr) cache->output = out;
  return out;
}

Tensor layer_backward(const Tensor& h_prev, const LayerParams& params, const LayerOptions& options,
                      const LayerCache& cache, const Tensor& d_hidden, LayerGrads& grads) {
  const LayerOutput& out = cache.output;
  PropagateInputGrads pg =
      propagate_backward(out.pooled, out.convolved, params.w_prop.value, options.activation,
                         options.graph, cache.propagate, d_hidden, grads.w_prop);
  const auto windows = fixed_windows(h_prev.rows(), params.k);
  Tensor d_h = segment_convolve_backward(h_prev, windows, params.k, params.w_conv.value,
                                         pg.d_convolved, grads.w_conv);
  if (options.pooling == Pooling::kAverage) {
    d_h += segment_mean_backward(pg.d_pooled, h_prev.rows(), windows);
  } else {
    d_h += attention_pool_backward(h_prev, params.k, params.w_att.value, params.b_att.value[0],
                                   pg.d_pooled, grads.w_att, grads.b_att[0]);
  }
  return d_h;
}

std::vector<std::size_t> stack_node_counts(std::size_t n, std::span<const LayerParams> layers) {
  std::vector<std::size_t> counts{n};
  for (const LayerParams& p : layers) counts.push_back(pooled_count(counts.back(), p.k));
  return counts;
}

Tensor stack_forward(const Tensor& h0, std::span<const LayerParams> layers,
                     const LayerOptions& options, StackCache* cache) {
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].d_in != layers[l - 1].d_out) {
      throw DimensionError("stack_forward: layer " + std::to_string(l) + " d_in " +
                           std::to_string(layers[l].d_in) + " != previous d_out " +
                           std::to_string(layers[l - 1].d_out));
    }
  }
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->layers.assign(layers.size(), {});
  }
  Tensor h = h0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (cache != nullptr) cache->inputs.push_back(h);
    LayerCache* lc = cache != nullptr ? &cache->layers[l] : nullptr;
    h = layer_forward(h, layers[l], options, lc).hidden;
  }
  return Tensor(1, h.size(), std::vector<double>(h.values().begin(), h.values().end()));
}

Tensor stack_backward(std::span<const LayerParams> layers, const LayerOptions& options,
                      const StackCache& cache, const Tensor& d_flat, std::span<LayerGrads> grads) {
  if (layers.empty()) return d_flat;
  const Tensor& last_hidden = cache.layers.back().output.hidden;
  if (d_flat.size() != last_hidden.size()) {
    throw DimensionError("stack_backward: gradient " + d_flat.shape_string() +
                         " does not match output " + last_hidden.shape_string());
  }
  Tensor d = Tensor(last_hidden.rows(), last_hidden.cols(),
                    std::vector<double>(d_flat.values().begin(), d_flat.values().end()));
  for (std::size_t l = layers.size(); l-- > 0;) {
    d = layer_backward(cache.inputs[l], layers[l], options, cache.layers[l], d, grads[l]);
  }
  return d;
}

}  // namespace dcgn
