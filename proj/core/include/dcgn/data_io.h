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

#ifndef DCGN_DATA_IO_H_
#define DCGN_DATA_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcgn/tensor.h"

namespace dcgn {

// Feature file layout (little-endian):
//   bytes 0-3   magic "DCGN"
//   bytes 4-7   u32 version (1)
//   bytes 8-11  u32 n (rows)
//   bytes 12-15 u32 d (cols)
//   then n·d f32 values, row-major.
inline constexpr std::uint32_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 16;

std::string encode_features(const Tensor& features);
// Throws FormatError (with byte offset) on bad magic/version, a payload that
// is shorter or longer than declared, or a non-finite value.
Tensor decode_features(std::string_view bytes);

void write_features(const std::filesystem::path& path, const Tensor& features);
Tensor read_features(const std::filesystem::path& path);

struct ManifestEntry {
  std::string id;
  std::string path;  // relative paths resolve against the manifest's directory
  std::vector<int> labels;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& e) const;
};

// Reads a JSON Lines manifest. Checks ids are unique, labels are in
// [0, num_classes) when num_classes is given, and referenced files exist.
Manifest read_manifest(const std::filesystem::path& path,
                       std::optional<std::size_t> num_classes = std::nullopt);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace dcgn

#endif  // DCGN_DATA_IO_H_
