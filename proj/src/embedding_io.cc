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

#include "hdg/embedding_io.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <unistd.h>

namespace hdg {
namespace {

class ByteWriter {
 public:
  void Bytes(std::string_view b) { out_.append(b); }
  void U8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void U16(std::uint16_t v) { Le(v, 2); }
  void U32(std::uint32_t v) { Le(v, 4); }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  std::string Take() { return std::move(out_); }

 private:
  void Le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string_view source) : bytes_(bytes), source_(source) {}

  std::string_view Bytes(std::size_t n, const char* what) {
    Need(n, what);
    std::string_view b = bytes_.substr(pos_, n);
    pos_ += n;
    return b;
  }
  std::uint8_t U8(const char* what) { return static_cast<std::uint8_t>(Le(1, what)); }
  std::uint16_t U16(const char* what) { return static_cast<std::uint16_t>(Le(2, what)); }
  std::uint32_t U32(const char* what) { return static_cast<std::uint32_t>(Le(4, what)); }
  float F32(const char* what) { return std::bit_cast<float>(U32(what)); }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void Need(std::size_t n, const char* what) {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncated,
                  std::string("file ends inside ") + what + " (need " + std::to_string(n) + " bytes, have " +
                      std::to_string(remaining()) + ")",
                  std::string(source_) + ":byte " + std::to_string(pos_));
    }
  }
  std::uint64_t Le(int n, const char* what) {
    Need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view bytes_;
  std::string_view source_;
  std::size_t pos_ = 0;
};

bool HasFooter(EmbeddingKind kind) {
  return kind == EmbeddingKind::kTeacherScores || kind == EmbeddingKind::kCheckpoint;
}

}  // namespace

std::string EncodeEmbeddings(const EmbeddingTable& table) {
  if (table.size() > std::numeric_limits<std::uint32_t>::max() ||
      table.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "table too large for the HDGE container");
  }
  ByteWriter w;
  w.Bytes(std::string_view(kHdgeMagic, 4));
  w.U32(kHdgeVersion);
  w.U8(static_cast<std::uint8_t>(table.kind()));
  w.U32(static_cast<std::uint32_t>(table.dim()));
  w.U32(static_cast<std::uint32_t>(table.size()));
  const auto rows = table.matrix();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string& key = table.keys()[i];
    if (key.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::kInvalidArgument, "row key longer than 65535 bytes", key.substr(0, 64));
    }
    w.U16(static_cast<std::uint16_t>(key.size()));
    w.Bytes(key);
    for (std::size_t j = 0; j < table.dim(); ++j) {
      const auto narrowed = static_cast<float>(rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      if (!std::isfinite(narrowed)) throw Error(ErrorCode::kNonFinite, "value overflows f32", key);
      w.F32(narrowed);
    }
  }
  if (HasFooter(table.kind())) {
    w.U32(static_cast<std::uint32_t>(table.footer().size()));
    w.Bytes(table.footer());
  } else if (!table.footer().empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "kind " + std::string(EmbeddingKindName(table.kind())) + " cannot carry a footer");
  }
  return w.Take();
}

EmbeddingTable DecodeEmbeddings(std::string_view bytes, std::string_view source) {
  ByteReader r(bytes, source);
  const std::string src(source);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kHdgeMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "missing HDGE magic", src);
  }
  r.Bytes(4, "magic");
  const std::uint32_t version = r.U32("version");
  if (version != kHdgeVersion) {
    throw Error(ErrorCode::kBadVersion, "unsupported HDGE version " + std::to_string(version), src);
  }
  const std::uint8_t kind_byte = r.U8("kind");
  if (kind_byte > static_cast<std::uint8_t>(EmbeddingKind::kCheckpoint)) {
    throw Error(ErrorCode::kBadKind, "unknown kind byte " + std::to_string(kind_byte), src);
  }
  const auto kind = static_cast<EmbeddingKind>(kind_byte);
  const std::uint32_t dim = r.U32("dim");
  const std::uint32_t count = r.U32("count");
  if (dim == 0) throw Error(ErrorCode::kDimMismatch, "declared dim is 0", src);

  EmbeddingTable table(kind, dim);
  Eigen::VectorXd row(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t key_len = r.U16("key length");
    std::string key(r.Bytes(key_len, "key"));
    for (std::uint32_t j = 0; j < dim; ++j) row[j] = static_cast<double>(r.F32("row payload"));
    if (!row.allFinite()) throw Error(ErrorCode::kNonFinite, "non-finite value in row '" + key + "'", src + ":" + key);
    table.Add(std::move(key), row);
  }
  if (HasFooter(kind)) {
    const std::uint32_t footer_len = r.U32("footer length");
    table.set_footer(std::string(r.Bytes(footer_len, "footer")));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kTrailingBytes, std::to_string(r.remaining()) + " bytes after the last record",
                src + ":byte " + std::to_string(r.position()));
  }
  return table;
}

EmbeddingTable LoadEmbeddings(const std::filesystem::path& path) {
  return DecodeEmbeddings(ReadFile(path), path.string());
}

void SaveEmbeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  WriteFileAtomic(path, EncodeEmbeddings(table));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading", path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed", path.string());
  return data;
}

void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open for writing", tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::kIo, "write failed", tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "rename failed: " + ec.message(), path.string());
  }
}

}  // namespace hdg
