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

#ifndef DCGN_SYNTH_H_
#define DCGN_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dcgn/data_io.h"
#include "dcgn/tensor.h"

namespace dcgn {

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

// Generator settings for a corpus of shot-structured videos. Each class owns
// `prototypes_per_class` unit vectors; a video is a run of shots, each shot
// repeating one prototype with fresh Gaussian noise on every frame.
struct SynthSpec {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::size_t prototypes_per_class = 1;
  // Prototypes are drawn from a random subspace of this dimension; 0 means
  // the full feature space.
  std::size_t prototype_rank = 0;
  CountRange classes_per_video{1, 3};
  CountRange shots_per_video{4, 8};
  CountRange frames_per_shot{4, 8};
  double noise_std = 0.3;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthVideo {
  std::string id;
  Tensor frames;  // rounded to f32, exactly as stored on disk
  std::vector<int> labels;
  std::vector<std::size_t> shot_joins;  // first frame index of shots 2..S
  std::vector<std::size_t> shot_prototypes;
};

// (num_classes · prototypes_per_class) × dim; row c·P + p is prototype p of
// class c. Rows are unit-norm and pairwise distinct.
Tensor make_prototypes(const SynthSpec& spec);

std::string synth_video_id(std::size_t index);

// Video `index` of the corpus; depends only on (spec, index).
SynthVideo synth_video(const SynthSpec& spec, const Tensor& prototypes, std::size_t index);

struct SynthOutput {
  std::filesystem::path manifest_path;
  Manifest manifest;
};

// Writes videos [first_index, first_index + count) under out_dir/videos and
// a manifest at out_dir/manifest_name. Byte-identical for a fixed spec.
SynthOutput synth_corpus(const SynthSpec& spec, std::size_t count,
                         const std::filesystem::path& out_dir, std::size_t first_index = 0,
                         const std::string& manifest_name = "manifest.jsonl");

}  // namespace dcgn

#endif  // DCGN_SYNTH_H_
