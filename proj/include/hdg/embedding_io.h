// Copyright 2026 The HDG Toolkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HDG_EMBEDDING_IO_H_
#define HDG_EMBEDDING_IO_H_

#include <filesystem>
#include <string>
#include <string_view>

#include "hdg/manifest.h"

namespace hdg {

// HDGE container, little-endian:
//
//   "HDGE" | u32 version=1 | u8 kind | u32 dim | u32 count
//   count x [ u16 key_len | key bytes (UTF-8) | dim x f32 ]
//   kinds 3 and 4 only: u32 footer_len | footer bytes (UTF-8 JSON)
//
// Payload is f32 on disk and f64 in memory. Tables whose entries are
// f32-representable (every loaded table) round-trip bit-exactly.

inline constexpr char kHdgeMagic[4] = {'H', 'D', 'G', 'E'};
inline constexpr std::uint32_t kHdgeVersion = 1;

std::string EncodeEmbeddings(const EmbeddingTable& table);
EmbeddingTable DecodeEmbeddings(std::string_view bytes, std::string_view source = "<memory>");

EmbeddingTable LoadEmbeddings(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so a failed write leaves no
/// partial file behind.
void SaveEmbeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// Atomic whole-file write used by every on-disk artifact.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);
std::string ReadFile(const std::filesystem::path& path);

}  // namespace hdg

#endif  // HDG_EMBEDDING_IO_H_
