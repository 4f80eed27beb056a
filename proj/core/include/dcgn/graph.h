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

#ifndef DCGN_GRAPH_H_
#define DCGN_GRAPH_H_

#include <cstddef>
#include <string>

#include "dcgn/tensor.h"

namespace dcgn {

// Dense node-similarity graph. Symmetric, unit diagonal for nonzero-norm
// nodes, entries in [0, 1] when negatives are clamped.
struct AffinityMatrix {
  Tensor entries;
  std::size_t n() const { return entries.rows(); }
};

enum class AdjacencyNorm {
  kSymmetric,  // D^{-1/2} A D^{-1/2}
  kRow,        // D^{-1} A
};

std::string to_string(AdjacencyNorm n);
AdjacencyNorm adjacency_norm_from_string(const std::string& s);

struct GraphOptions {
  bool clamp_negative = true;
  AdjacencyNorm norm = AdjacencyNorm::kSymmetric;
};

// Pairwise cosine similarity of the rows of `features`. A zero-norm row is
// similar only to itself (entry 1 on the diagonal, 0 elsewhere).
AffinityMatrix build_affinity(const Tensor& features, bool clamp_negative = true);

Tensor normalize_symmetric(const AffinityMatrix& a);
Tensor normalize_rows(const AffinityMatrix& a);
Tensor normalize_adjacency(const AffinityMatrix& a, AdjacencyNorm norm);

// dL/dA given A and dL/d(normalized A).
Tensor normalize_adjacency_backward(const AffinityMatrix& a, AdjacencyNorm norm,
                                    const Tensor& d_normalized);

// dL/dfeatures given the affinity built from `features` and dL/dA. Clamped
// entries and zero-norm rows pass no gradient.
Tensor build_affinity_backward(const Tensor& features, const AffinityMatrix& a,
                               const Tensor& d_affinity, bool clamp_negative);

}  // namespace dcgn

#endif  // DCGN_GRAPH_H_
