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

#ifndef HDG_TESTS_TEST_UTIL_H_
#define HDG_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "hdg/common.h"

// Expects `statement` to throw hdg::Error carrying `expected_code`.
#define EXPECT_HDG_ERROR(statement, expected_code)                                   \
  do {                                                                               \
    try {                                                                            \
      statement;                                                                     \
      ADD_FAILURE() << "expected hdg::Error(" << #expected_code << ")";              \
    } catch (const ::hdg::Error& e) {                                                \
      EXPECT_EQ(e.code(), expected_code) << e.what();                                \
    }                                                                                \
  } while (0)

namespace hdg::testing {

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path ScratchDir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "hdg_tests" /
                              (std::string(info->test_suite_name()) + "." + info->name() + "." + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace hdg::testing

#endif  // HDG_TESTS_TEST_UTIL_H_
