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

#include "dcgn/graph.h"

#include <cmath>
#include <vector>

#include "dcgn/errors.h"

namespace dcgn {
namespace {

std::vector<double> RowNorms(const Tensor& f) {
  std::vector<double> norms(f.rows());
  for (std::size_t i = 0; i < f.rows(); ++i) {
    double s = 0.0;
    for (double v : f.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  return norms;
}

std::vector<double> Degrees(const AffinityMatrix& a) {
  std::vector<double> deg(a.n(), 0.0);
  for (std::size_t i = 0; i < a.n(); ++i) {
    for (double v : a.entries.row(i)) deg[i] += v;
    if (deg[i] <= 0.0) {
      throw std::logic_error("affinity row " + std::to_string(i) + " has non-positive degree");
    }
  }
  return deg;
}

void RequireSquare(const Tensor& t, const char* op) {
  if (t.rows() != t.cols()) {
    throw DimensionError(std::string(op) + ": expected square matrix, got " + t.shape_string());
  }
}

}  // namespace

std::string to_string(AdjacencyNorm n) {
  return n == AdjacencyNorm::kSymmetric ? "symmetric" : "row";
}

AdjacencyNorm adjacency_norm_from_string(const std::string& s) {
  if (s == "symmetric") return AdjacencyNorm::kSymmetric;
  if (s == "row") return AdjacencyNorm::kRow;
  throw ParameterError("unknown adjacency normalization '" + s + "'");
}

AffinityMatrix build_affinity(const Tensor& features, bool clamp_negative) {
  const std::size_t n = features.rows();
  const std::vector<double> norms = RowNorms(features);
  AffinityMatrix a{Tensor(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    a.entries(i, i) = 1.0;
    if (norms[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norms[j] == 0.0) continue;
      double dot = 0.0;
      auto fi = features.row(i);
      auto fj = features.row(j);
      for (std::size_t d = 0; d < fi.size(); ++d) dot += fi[d] * fj[d];
      double cos = dot / (norms[i] * norms[j]);
      if (clamp_negative && cos < 0.0) cos = 0.0;
      a.entries(i, j) = cos;
      a.entries(j, i) = cos;
    }
  }
  return a;
}

Tensor normalize_symmetric(const AffinityMatrix& a) {
  RequireSquare(a.entries, "normalize_symmetric");
  const std::vector<double> deg = Degrees(a);
  std::vector<double> inv_sqrt(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
  Tensor out(a.n(), a.n());
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t j = 0; j < a.n(); ++j) out(i, j) = inv_sqrt[i] * a.entries(i, j) * inv_sqrt[j];
  return out;
}

Tensor normalize_rows(const AffinityMatrix& a) {
  RequireSquare(a.entries, "normalize_rows");
  const std::vector<double> deg = Degrees(a);
  Tensor out(a.n(), a.n());
  for (std::size_t i = 0; i < a.n(); ++i)
    for (std::size_t j = 0; j < a.n(); ++j) out(i, j) = a.entries(i, j) / deg[i];
  return out;
}

Tensor normalize_adjacency(const AffinityMatrix& a, AdjacencyNorm norm) {
  return norm == AdjacencyNorm::kSymmetric ? normalize_symmetric(a) : normalize_rows(a);
}

Tensor normalize_adjacency_backward(const AffinityMatrix& a, AdjacencyNorm norm,
                                    const Tensor& d_normalized) {
  const std::size_t n = a.n();
  if (!d_normalized.same_shape(a.entries)) {
    throw DimensionError("normalize_adjacency_backward: gradient shape " +
                         d_normalized.shape_string() + " vs " + a.entries.shape_string());
  }
  const std::vector<double> deg = Degrees(a);
  Tensor d_a(n, n);
  // d_deg[i] collects dL/d(degree_i); each degree is a row sum of A.
  std::vector<double> d_deg(n, 0.0);
  if (norm == AdjacencyNorm::kSymmetric) {
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = d_normalized(i, j);
        const double s = inv_sqrt[i] * inv_sqrt[j];
        d_a(i, j) += g * s;
        const double term = g * a.entries(i, j) * s;
        d_deg[i] -= 0.5 * term / deg[i];
        d_deg[j] -= 0.5 * term / deg[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = d_normalized(i, j);
        d_a(i, j) += g / deg[i];
        d_deg[i] -= g * a.entries(i, j) / (deg[i] * deg[i]);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d_a(i, j) += d_deg[i];
  return d_a;
}

Tensor build_affinity_backward(const Tensor& features, const AffinityMatrix& a,
                               const Tensor& d_affinity, bool clamp_negative) {
  const std::size_t n = features.rows();
  const std::size_t dim = features.cols();
  if (a.n() != n || !d_affinity.same_shape(a.entries)) {
    throw DimensionError("build_affinity_backward: shapes " + features.shape_string() + ", " +
                         a.entries.shape_string() + ", " + d_affinity.shape_string());
  }
  const std::vector<double> norms = RowNorms(features);
  Tensor d_f(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (norms[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || norms[j] == 0.0) continue;
      const double cos = a.entries(i, j);
      if (clamp_negative && cos <= 0.0) continue;
      // A(i,j) and A(j,i) are the same function of (f_i, f_j); the loop over
      // ordered pairs sums both contributions.
      const double g = d_affinity(i, j);
      if (g == 0.0) continue;
      const double inv = 1.0 / (norms[i] * norms[j]);
      const double self = cos / (norms[i] * norms[i]);
      auto fi = features.row(i);
      auto fj = features.row(j);
      auto di = d_f.row(i);
      for (std::size_t d = 0; d < dim; ++d) di[d] += g * (fj[d] * inv - fi[d] * self);
      auto dj = d_f.row(j);
      const double self_j = cos / (norms[j] * norms[j]);
      for (std::size_t d = 0; d < dim; ++d) dj[d] += g * (fi[d] * inv - fj[d] * self_j);
    }
  }
  return d_f;
}

}  // namespace dcgn
