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

#include "dcgn/shots.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcgn/errors.h"
#include "dcgn/graph.h"

namespace dcgn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ties closer than this (relative to the optimum) count as equal.
double TieTolerance(double optimum) { return 1e-12 * std::max(1.0, std::abs(optimum)); }

// best[j][s]: minimum cost of splitting frames [s, n) into j segments.
std::vector<std::vector<double>> SuffixTable(const SegmentCostTable& costs, std::size_t m_max) {
  const std::size_t n = costs.n();
  std::vector<std::vector<double>> best(m_max + 1, std::vector<double>(n + 1, kInf));
  for (std::size_t s = 0; s < n; ++s) best[1][s] = costs.cost(s, n);
  for (std::size_t j = 2; j <= m_max; ++j) {
    // At least j frames must remain.
    for (std::size_t s = 0; s + j <= n; ++s) {
      double b = kInf;
      for (std::size_t e = s + 1; e + (j - 1) <= n; ++e) {
        b = std::min(b, costs.cost(s, e) + best[j - 1][e]);
      }
      best[j][s] = b;
    }
  }
  return best;
}

KtsResult Reconstruct(const SegmentCostTable& costs, const std::vector<std::vector<double>>& best,
                      std::size_t m) {
  const std::size_t n = costs.n();
  KtsResult result;
  result.boundaries.n = n;
  const double tol = TieTolerance(best[m][0]);
  std::size_t s = 0;
  double total = 0.0;
  for (std::size_t j = m; j > 1; --j) {
    std::size_t chosen = 0;
    for (std::size_t e = s + 1; e + (j - 1) <= n; ++e) {
      if (costs.cost(s, e) + best[j - 1][e] <= best[j][s] + tol) {
        chosen = e;
        break;
      }
    }
    total += costs.cost(s, chosen);
    result.boundaries.cuts.push_back(chosen);
    s = chosen;
  }
  total += costs.cost(s, n);
  result.cost = total;
  result.objective = total;
  return result;
}

void RequireSegmentCount(std::size_t m, std::size_t n) {
  if (m < 1 || m > n) {
    throw ParameterError("shot count m=" + std::to_string(m) + " must be in [1, " +
                         std::to_string(n) + "]");
  }
}

}  // namespace

std::vector<Segment> ShotBoundaries::segments() const {
  std::vector<Segment> out;
  out.reserve(m());
  std::size_t begin = 0;
  for (std::size_t c : cuts) {
    out.push_back({begin, c});
    begin = c;
  }
  out.push_back({begin, n});
  return out;
}

void ShotBoundaries::validate() const {
  std::size_t prev = 0;
  for (std::size_t c : cuts) {
    if (c <= prev || c >= n) {
      throw ParameterError("shot cuts must be strictly increasing in (0, " + std::to_string(n) +
                           "), got " + std::to_string(c));
    }
    prev = c;
  }
}

SegmentCostTable::SegmentCostTable(const Tensor& features)
    : n_(features.rows()), table_((n_ + 1) * (n_ + 1), 0.0) {
  const std::size_t dim = features.cols();
  // prefix[t] = Σ_{u<t} f_u, prefix_sq[t] = Σ_{u<t} ‖f_u‖².
  std::vector<double> prefix((n_ + 1) * dim, 0.0);
  std::vector<double> prefix_sq(n_ + 1, 0.0);
  for (std::size_t t = 0; t < n_; ++t) {
    auto f = features.row(t);
    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      prefix[(t + 1) * dim + d] = prefix[t * dim + d] + f[d];
      sq += f[d] * f[d];
    }
    prefix_sq[t + 1] = prefix_sq[t] + sq;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j <= n_; ++j) {
      double sum_norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double s = prefix[j * dim + d] - prefix[i * dim + d];
        sum_norm += s * s;
      }
      const double len = static_cast<double>(j - i);
      const double v = (prefix_sq[j] - prefix_sq[i]) - sum_norm / len;
      // Cancellation can leave a tiny negative residue.
      table_[i * (n_ + 1) + j] = j == i + 1 ? 0.0 : std::max(0.0, v);
    }
  }
}

SegmentCostTable segment_costs(const Tensor& features) {
  if (features.rows() == 0) throw ParameterError("segment_costs: empty sequence");
  return SegmentCostTable(features);
}

KtsResult kts_fixed(const SegmentCostTable& costs, std::size_t m) {
  RequireSegmentCount(m, costs.n());
  return Reconstruct(costs, SuffixTable(costs, m), m);
}

double kts_penalty(std::size_t m, std::size_t n) {
  const double md = static_cast<double>(m);
  return md * (std::log(static_cast<double>(n) / md) + 1.0);
}

KtsResult kts_auto(const SegmentCostTable& costs, double c_penalty, std::size_t m_max) {
  if (!(c_penalty >= 0.0)) throw ParameterError("kts_auto: c_penalty must be >= 0");
  RequireSegmentCount(m_max, costs.n());
  const auto best = SuffixTable(costs, m_max);
  KtsResult chosen;
  bool have = false;
  for (std::size_t m = 1; m <= m_max; ++m) {
    KtsResult r = Reconstruct(costs, best, m);
    r.objective = r.cost + c_penalty * kts_penalty(m, costs.n());
    if (!have || r.objective < chosen.objective - TieTolerance(chosen.objective)) {
      chosen = std::move(r);
      have = true;
    }
  }
  return chosen;
}

Tensor frame_similarity(const Tensor& frames) {
  return build_affinity(frames, /*clamp_negative=*/false).entries;
}

ShotLayerParams ShotLayerParams::Create(const std::string& prefix, std::size_t k_max,
                                        std::size_t d_in, std::size_t d_out, std::uint64_t seed) {
  if (k_max == 0 || d_in == 0 || d_out == 0) {
    throw ParameterError("ShotLayerParams: k_max, d_in, d_out must be >= 1");
  }
  ShotLayerParams p;
  p.k_max = k_max;
  p.d_in = d_in;
  p.d_out = d_out;
  p.w_conv = ParamTensor(prefix + ".w_conv",
                         glorot_uniform(k_max * d_in, d_out, seed, prefix + ".w_conv"));
  p.w_prop =
      ParamTensor(prefix + ".w_prop", glorot_uniform(d_out, d_out, seed, prefix + ".w_prop"));
  return p;
}

std::vector<ParamTensor*> ShotLayerParams::parameters() { return {&w_conv, &w_prop}; }

void ShotLayerParams::validate() const {
  if (w_conv.value.rows() != k_max * d_in || w_conv.value.cols() != d_out ||
      w_prop.value.rows() != d_out || w_prop.value.cols() != d_out) {
    throw DimensionError(
        "ShotLayerParams: shapes inconsistent with k_max=" + std::to_string(k_max) +
        ", d_in=" + std::to_string(d_in) + ", d_out=" + std::to_string(d_out));
  }
}

ShotLayerGrads ShotLayerGrads::ZerosLike(const ShotLayerParams& p) {
  return {Tensor(p.w_conv.value.rows(), p.w_conv.value.cols()),
          Tensor(p.w_prop.value.rows(), p.w_prop.value.cols())};
}

ShotLayerGrads& ShotLayerGrads::operator+=(const ShotLayerGrads& o) {
  w_conv += o.w_conv;
  w_prop += o.w_prop;
  return *this;
}

LayerOutput shot_layer_forward(const Tensor& frames, const ShotBoundaries& boundaries,
                               const ShotLayerParams& params, Activation activation,
                               const GraphOptions& graph, ShotLayerCache* cache) {
  if (boundaries.n != frames.rows()) {
    throw DimensionError("shot_layer_forward: boundaries cover " + std::to_string(boundaries.n) +
                         " frames, input has " + std::to_string(frames.rows()));
  }
  if (frames.cols() != params.d_in) {
    throw DimensionError("shot_layer_forward: input " + frames.shape_string() +
                         " does not match d_in " + std::to_string(params.d_in));
  }
  boundaries.validate();
  std::vector<Segment> segments = boundaries.segments();
  LayerOutput out;
  out.pooled = segment_mean(frames, segments);
  out.convolved = segment_convolve(frames, segments, params.k_max, params.w_conv.value);
  PropagateCache* pc = cache != nullptr ? &cache->propagate : nullptr;
  out.hidden = propagate(out.pooled, out.convolved, params.w_prop.value, activation, graph, pc);
  if (cache != nullptr) {
    cache->output = out;
    cache->segments = std::move(segments);
  }
  return out;
}

void shot_layer_backward(const Tensor& frames, const ShotLayerParams& params, Activation activation,
                         const GraphOptions& graph, const ShotLayerCache& cache,
                         const Tensor& d_hidden, ShotLayerGrads& grads) {
  const LayerOutput& out = cache.output;
  PropagateInputGrads pg =
      propagate_backward(out.pooled, out.convolved, params.w_prop.value, activation, graph,
                         cache.propagate, d_hidden, grads.w_prop);
  segment_convolve_backward(frames, cache.segments, params.k_max, params.w_conv.value,
                            pg.d_convolved, grads.w_conv);
}

}  // namespace dcgn
