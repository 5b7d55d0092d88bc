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

#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "hdg/rng.h"
#include "test_util.h"

namespace hdg {
namespace {

EmbeddingTable SmallTable() {
  EmbeddingTable t(EmbeddingKind::kTeacherImage, 3);
  t.Add("a", Eigen::Vector3d(0.5, -1.25, 2.0));
  t.Add("b", Eigen::Vector3d(1.0, 0.0, -0.125));
  return t;
}

void PatchU32(std::string& bytes, std::size_t offset, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes[offset + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

TEST(EmbeddingIoTest, HeaderLayout) {
  const std::string bytes = EncodeEmbeddings(SmallTable());
  ASSERT_EQ(bytes.size(), 17u + 2 * (2 + 1 + 3 * 4));
  EXPECT_EQ(bytes.substr(0, 4), "HDGE");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian
  EXPECT_EQ(bytes[8], static_cast<char>(EmbeddingKind::kTeacherImage));
  EXPECT_EQ(bytes[9], 3);   // dim
  EXPECT_EQ(bytes[13], 2);  // count
  EXPECT_EQ(bytes[17], 1);  // first key length
  EXPECT_EQ(bytes[19], 'a');
  float first = 0;
  std::memcpy(&first, bytes.data() + 20, 4);
  EXPECT_EQ(first, 0.5f);
}

TEST(EmbeddingIoTest, SmallTableRoundTrips) {
  const EmbeddingTable t = SmallTable();
  EXPECT_EQ(DecodeEmbeddings(EncodeEmbeddings(t)), t);
}

TEST(EmbeddingIoTest, EmptyTableIsValid) {
  const EmbeddingTable empty(EmbeddingKind::kStudentFeature, 7);
  const std::string bytes = EncodeEmbeddings(empty);
  EXPECT_EQ(bytes.size(), 17u);
  const EmbeddingTable back = DecodeEmbeddings(bytes);
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.dim(), 7u);
  EXPECT_EQ(back.kind(), EmbeddingKind::kStudentFeature);
}

TEST(EmbeddingIoTest, FileRoundTripAndAtomicWrite) {
  const auto dir = testing::ScratchDir("io");
  const EmbeddingTable t = SmallTable();
  SaveEmbeddings(t, dir / "t.hdge");
  EXPECT_EQ(LoadEmbeddings(dir / "t.hdge"), t);
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
  EXPECT_EQ(entries, 1u) << "temporary file left behind";
  EXPECT_HDG_ERROR(SaveEmbeddings(t, dir / "no_such_dir" / "t.hdge"), ErrorCode::kIo);
  EXPECT_FALSE(std::filesystem::exists(dir / "no_such_dir"));
}

TEST(EmbeddingIoTest, FooterKindsCarryMetadata) {
  EmbeddingTable scores(EmbeddingKind::kTeacherScores, 2);
  scores.Add("s", Eigen::Vector2d(0.25, 0.75));
  scores.set_footer(R"({"lambda":0.01})");
  const EmbeddingTable back = DecodeEmbeddings(EncodeEmbeddings(scores));
  EXPECT_EQ(back.footer(), R"({"lambda":0.01})");
  EXPECT_EQ(back, scores);

  EmbeddingTable plain = SmallTable();
  plain.set_footer("x");
  EXPECT_HDG_ERROR(EncodeEmbeddings(plain), ErrorCode::kInvalidArgument);
}

TEST(EmbeddingIoTest, RandomTablesRoundTripBitExactly) {
  Xoshiro256 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dim = static_cast<std::size_t>(1 + rng.Below(40));
    const auto kind = static_cast<EmbeddingKind>(rng.Below(5));
    EmbeddingTable t(kind, dim);
    const auto rows = rng.Below(30);
    for (std::uint64_t r = 0; r < rows; ++r) {
      Eigen::VectorXd row(dim);
      for (auto& v : row) v = static_cast<float>(rng.Normal() * 100.0);
      t.Add("row/" + std::to_string(r), row);
    }
    const EmbeddingTable back = DecodeEmbeddings(EncodeEmbeddings(t));
    ASSERT_EQ(back, t) << "trial " << trial;
    EXPECT_EQ(EncodeEmbeddings(back), EncodeEmbeddings(t));
  }
}

TEST(EmbeddingIoTest, PayloadIsNarrowedToF32) {
  EmbeddingTable t(EmbeddingKind::kStudentFeature, 1);
  t.Add("x", Eigen::VectorXd::Constant(1, 0.1));
  const EmbeddingTable back = DecodeEmbeddings(EncodeEmbeddings(t));
  EXPECT_EQ(back.Row("x")(0), static_cast<double>(0.1f));

  EmbeddingTable huge(EmbeddingKind::kStudentFeature, 1);
  huge.Add("big", Eigen::VectorXd::Constant(1, 1e300));
  EXPECT_HDG_ERROR(EncodeEmbeddings(huge), ErrorCode::kNonFinite);
}

TEST(EmbeddingIoTest, BadMagic) {
  std::string bytes = EncodeEmbeddings(SmallTable());
  bytes[0] = 'X';
  EXPECT_HDG_ERROR(DecodeEmbeddings(bytes), ErrorCode::kBadMagic);
  EXPECT_HDG_ERROR(DecodeEmbeddings("HD"), ErrorCode::kBadMagic);
}

TEST(EmbeddingIoTest, BadVersionAndKind) {
  std::string bytes = EncodeEmbeddings(SmallTable());
  PatchU32(bytes, 4, 2);
  EXPECT_HDG_ERROR(DecodeEmbeddings(bytes), ErrorCode::kBadVersion);
  bytes = EncodeEmbeddings(SmallTable());
  bytes[8] = 9;
  EXPECT_HDG_ERROR(DecodeEmbeddings(bytes), ErrorCode::kBadKind);
}

TEST(EmbeddingIoTest, ShortRowIsTruncation) {
  // Declared dim 512 but the only row carries 511 floats.
  EmbeddingTable t(EmbeddingKind::kTeacherImage, 512);
  t.Add("img", Eigen::VectorXd::Ones(512));
  std::string bytes = EncodeEmbeddings(t);
  bytes.resize(bytes.size() - 4);
  try {
    DecodeEmbeddings(bytes, "short.hdge");
    FAIL() << "expected truncation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruncated);
    EXPECT_NE(e.location().find("short.hdge:byte"), std::string::npos);
  }
}

TEST(EmbeddingIoTest, EveryPrefixIsRejected) {
  const std::string bytes = EncodeEmbeddings(SmallTable());
  for (std::size_t n = 4; n < bytes.size(); ++n) {
    EXPECT_HDG_ERROR(DecodeEmbeddings(bytes.substr(0, n)), ErrorCode::kTruncated);
  }
}

TEST(EmbeddingIoTest, NanNamesTheRow) {
  std::string bytes = EncodeEmbeddings(SmallTable());
  const float nan = std::numeric_limits<float>::quiet_NaN();
  // Row "b" starts at 17 + 15; its payload begins after the 2-byte length and key.
  std::memcpy(bytes.data() + 17 + 15 + 3 + 4, &nan, 4);
  try {
    DecodeEmbeddings(bytes);
    FAIL() << "expected non-finite rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(EmbeddingIoTest, TrailingBytesAndZeroDim) {
  std::string bytes = EncodeEmbeddings(SmallTable());
  EXPECT_HDG_ERROR(DecodeEmbeddings(bytes + "x"), ErrorCode::kTrailingBytes);
  PatchU32(bytes, 9, 0);
  EXPECT_HDG_ERROR(DecodeEmbeddings(bytes), ErrorCode::kDimMismatch);
}

TEST(EmbeddingIoTest, DuplicateKeyInFileRejected) {
  std::string bytes = EncodeEmbeddings(SmallTable());
  bytes[17 + 15 + 2] = 'a';
  EXPECT_HDG_ERROR(DecodeEmbeddings(bytes), ErrorCode::kDuplicateSample);
}

}  // namespace
}  // namespace hdg
