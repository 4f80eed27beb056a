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

#include "dcgn/data_io.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "dcgn/errors.h"
#include "json.hpp"

namespace dcgn {
namespace {

constexpr char kMagic[4] = {'D', 'C', 'G', 'N'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t GetU32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

}  // namespace

std::string encode_features(const Tensor& features) {
  if (features.rows() > UINT32_MAX || features.cols() > UINT32_MAX) {
    throw ParameterError("feature matrix too large for the file format");
  }
  std::string out(kMagic, 4);
  PutU32(out, kFeatureFileVersion);
  PutU32(out, static_cast<std::uint32_t>(features.rows()));
  PutU32(out, static_cast<std::uint32_t>(features.cols()));
  out.reserve(kFeatureHeaderBytes + 4 * features.size());
  for (double v : features.values()) {
    PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Tensor decode_features(std::string_view bytes) {
  if (bytes.size() < kFeatureHeaderBytes) {
    throw FormatError("truncated header: " + std::to_string(bytes.size()) + " bytes", bytes.size());
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic", 0);
  const std::uint32_t version = GetU32(bytes, 4);
  if (version != kFeatureFileVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 4);
  }
  const std::uint64_t n = GetU32(bytes, 8);
  const std::uint64_t d = GetU32(bytes, 12);
  // n, d < 2^32 so n·d·4 < 2^66; guard the multiplication.
  const std::uint64_t count = n * d;
  if (d != 0 && count / d != n) throw FormatError("size overflow", 8);
  if (count > (UINT64_MAX - kFeatureHeaderBytes) / 4) throw FormatError("size overflow", 8);
  const std::uint64_t expected_end = kFeatureHeaderBytes + 4 * count;
  if (bytes.size() < expected_end) {
    throw FormatError("payload truncated: header declares " + std::to_string(n) + "x" +
                          std::to_string(d) + " values ending at byte " +
                          std::to_string(expected_end) + ", file has " +
                          std::to_string(bytes.size()) + " bytes",
                      expected_end);
  }
  if (bytes.size() > expected_end) {
    throw FormatError("trailing bytes after declared payload", expected_end);
  }
  Tensor out(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t offset = kFeatureHeaderBytes + 4 * i;
    const float v = std::bit_cast<float>(GetU32(bytes, offset));
    if (!std::isfinite(v)) throw FormatError("non-finite value", offset);
    out[i] = v;
  }
  return out;
}

void write_features(const std::filesystem::path& path, const Tensor& features) {
  const std::string bytes = encode_features(features);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Tensor read_features(const std::filesystem::path& path) { return decode_features(ReadFile(path)); }

std::filesystem::path Manifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest read_manifest(const std::filesystem::path& path, std::optional<std::size_t> num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError(where + ": invalid JSON: " + e.what());
    }
    ManifestEntry entry;
    try {
      entry.id = j.at("id").get<std::string>();
      entry.path = j.at("path").get<std::string>();
      entry.labels = j.at("labels").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParameterError(where + ": " + e.what());
    }
    if (!ids.insert(entry.id).second) {
      throw ParameterError(where + ": duplicate id '" + entry.id + "'");
    }
    for (int l : entry.labels) {
      if (l < 0 || (num_classes && static_cast<std::size_t>(l) >= *num_classes)) {
        throw ParameterError(where + ": label " + std::to_string(l) + " out of range");
      }
    }
    if (!std::filesystem::exists(m.resolve(entry))) {
      throw IoError(where + ": missing feature file " + m.resolve(entry).string());
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create manifest " + path.string());
  for (const ManifestEntry& e : manifest.entries) {
    nlohmann::json j = {{"id", e.id}, {"path", e.path}, {"labels", e.labels}};
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dcgn
