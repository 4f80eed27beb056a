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

#include "dcgn/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dcgn/errors.h"
#include "dcgn/rng.h"

namespace dcgn {
namespace {

void Normalize(std::span<double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : v) x *= inv;
}

void RequireRange(const CountRange& r, const char* name) {
  if (r.lo == 0 || r.lo > r.hi) {
    throw ParameterError(std::string("synth.") + name + ": need 1 <= lo <= hi, got [" +
                         std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
  }
}

// Orthonormal basis of a random `rank`-dimensional subspace of R^dim.
Tensor RandomBasis(std::size_t rank, std::size_t dim, SplitMix64& rng) {
  Tensor basis(rank, dim);
  for (std::size_t i = 0; i < rank; ++i) {
    auto b = basis.row(i);
    for (;;) {
      for (double& x : b) x = rng.normal();
      for (std::size_t j = 0; j < i; ++j) {
        auto prev = basis.row(j);
        double dot = 0.0;
        for (std::size_t d = 0; d < dim; ++d) dot += b[d] * prev[d];
        for (std::size_t d = 0; d < dim; ++d) b[d] -= dot * prev[d];
      }
      double norm = 0.0;
      for (double x : b) norm += x * x;
      if (norm > 1e-6) break;
    }
    Normalize(b);
  }
  return basis;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_classes == 0) throw ParameterError("synth.num_classes must be >= 1");
  if (dim == 0) throw ParameterError("synth.dim must be >= 1");
  if (prototypes_per_class == 0) {
    throw ParameterError("synth.prototypes_per_class must be >= 1");
  }
  if (prototype_rank > dim) throw ParameterError("synth.prototype_rank exceeds synth.dim");
  if (prototype_rank == 1 && num_classes * prototypes_per_class > 2) {
    throw ParameterError("synth.prototype_rank=1 admits at most 2 distinct prototypes");
  }
  if (dim == 1 && num_classes * prototypes_per_class > 2) {
    throw ParameterError("synth.dim=1 admits at most 2 distinct prototypes");
  }
  RequireRange(classes_per_video, "classes_per_video");
  RequireRange(shots_per_video, "shots_per_video");
  RequireRange(frames_per_shot, "frames_per_shot");
  if (classes_per_video.hi > num_classes) {
    throw ParameterError("synth.classes_per_video exceeds synth.num_classes");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ParameterError("synth.noise_std must be finite and >= 0");
  }
}

Tensor make_prototypes(const SynthSpec& spec) {
  spec.validate();
  SplitMix64 rng(derive_seed(spec.seed, "prototypes"));
  const std::size_t rank = spec.prototype_rank == 0 ? spec.dim : spec.prototype_rank;
  const Tensor basis = RandomBasis(rank, spec.dim, rng);
  const std::size_t total = spec.num_classes * spec.prototypes_per_class;
  Tensor protos(total, spec.dim);
  for (std::size_t i = 0; i < total; ++i) {
    auto p = protos.row(i);
    for (;;) {
      std::fill(p.begin(), p.end(), 0.0);
      for (std::size_t r = 0; r < rank; ++r) {
        const double g = rng.normal();
        auto b = basis.row(r);
        for (std::size_t d = 0; d < spec.dim; ++d) p[d] += g * b[d];
      }
      Normalize(p);
      bool distinct = true;
      for (std::size_t j = 0; j < i && distinct; ++j) {
        auto q = protos.row(j);
        double dot = 0.0;
        for (std::size_t d = 0; d < spec.dim; ++d) dot += p[d] * q[d];
        distinct = dot < 1.0 - 1e-6;
      }
      if (distinct) break;
    }
  }
  return protos;
}

std::string synth_video_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "v%06zu", index);
  return buf;
}

SynthVideo synth_video(const SynthSpec& spec, const Tensor& prototypes, std::size_t index) {
  SplitMix64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(index)));
  const std::size_t per_class = spec.prototypes_per_class;

  // Distinct classes for this video (partial Fisher-Yates).
  const std::size_t k = rng.uniform_int(spec.classes_per_video.lo, spec.classes_per_video.hi);
  std::vector<int> pool(spec.num_classes);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[rng.uniform_int(i, pool.size() - 1)]);
  }
  std::vector<int> classes(pool.begin(), pool.begin() + static_cast<long>(k));

  // Every chosen class gets at least one shot; the rest are drawn uniformly.
  const std::size_t shots =
      std::max<std::size_t>(k, rng.uniform_int(spec.shots_per_video.lo, spec.shots_per_video.hi));
  std::vector<int> shot_class(classes);
  while (shot_class.size() < shots) {
    shot_class.push_back(classes[rng.uniform_int(0, k - 1)]);
  }
  for (std::size_t i = shot_class.size(); i > 1; --i) {
    std::swap(shot_class[i - 1], shot_class[rng.uniform_int(0, i - 1)]);
  }

  // Adjacent shots with the same prototype are merged into one shot.
  std::vector<std::size_t> proto_of_shot;
  std::vector<std::size_t> frames_of_shot;
  for (int c : shot_class) {
    const std::size_t proto =
        static_cast<std::size_t>(c) * per_class + rng.uniform_int(0, per_class - 1);
    const std::size_t frames = rng.uniform_int(spec.frames_per_shot.lo, spec.frames_per_shot.hi);
    if (!proto_of_shot.empty() && proto_of_shot.back() == proto) {
      frames_of_shot.back() += frames;
    } else {
      proto_of_shot.push_back(proto);
      frames_of_shot.push_back(frames);
    }
  }

  SynthVideo video;
  video.id = synth_video_id(index);
  const std::size_t n =
      std::accumulate(frames_of_shot.begin(), frames_of_shot.end(), std::size_t{0});
  video.frames = Tensor(n, spec.dim);
  std::size_t t = 0;
  for (std::size_t s = 0; s < proto_of_shot.size(); ++s) {
    if (s > 0) video.shot_joins.push_back(t);
    auto proto = prototypes.row(proto_of_shot[s]);
    for (std::size_t f = 0; f < frames_of_shot[s]; ++f, ++t) {
      auto row = video.frames.row(t);
      for (std::size_t d = 0; d < spec.dim; ++d) {
        const double noise = spec.noise_std > 0.0 ? spec.noise_std * rng.normal() : 0.0;
        row[d] = static_cast<float>(proto[d] + noise);
      }
    }
  }
  video.shot_prototypes = std::move(proto_of_shot);
  std::sort(classes.begin(), classes.end());
  video.labels = std::move(classes);
  return video;
}

SynthOutput synth_corpus(const SynthSpec& spec, std::size_t count,
                         const std::filesystem::path& out_dir, std::size_t first_index,
                         const std::string& manifest_name) {
  if (count == 0) throw ParameterError("synth_corpus: count must be >= 1");
  const Tensor prototypes = make_prototypes(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "videos", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "videos").string() + ": " + ec.message());
  SynthOutput out;
  out.manifest.base_dir = out_dir;
  for (std::size_t i = 0; i < count; ++i) {
    SynthVideo v = synth_video(spec, prototypes, first_index + i);
    const std::string rel = "videos/" + v.id + ".dcgn";
    write_features(out_dir / rel, v.frames);
    out.manifest.entries.push_back({v.id, rel, v.labels});
  }
  out.manifest_path = out_dir / manifest_name;
  write_manifest(out.manifest_path, out.manifest);
  return out;
}

}  // namespace dcgn
