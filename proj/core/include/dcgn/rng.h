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

#ifndef DCGN_RNG_H_
#define DCGN_RNG_H_

#include <cstdint>
#include <string_view>

namespace dcgn {

// SplitMix64 stream. Platform-independent: every draw is defined purely in
// terms of 64-bit integer arithmetic, and normals use Box-Muller on top.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi], inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  double normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// One round of the SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Independent sub-seed for a labelled stream (e.g. a parameter name).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace dcgn

#endif  // DCGN_RNG_H_
