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

#ifndef HDG_CLI_H_
#define HDG_CLI_H_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hdg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Entry point behind the `hdg` binary. `args` excludes the program name.
/// Subcommands: synth, split, train, eval, report, gradcheck.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `key = value` lines; `#` starts a comment; values may be double-quoted.
/// Section headers ("[train]") are accepted and ignored.
std::map<std::string, std::string> ParseConfigText(std::string_view text);
std::map<std::string, std::string> LoadConfigFile(const std::filesystem::path& path);

std::string Sha256Hex(std::string_view data);

/// Append-only JSON-lines run ledger guarded by an advisory flock.
class RunLedger {
 public:
  explicit RunLedger(std::filesystem::path path) : path_(std::move(path)) {}

  /// Appends `json_line` unless a record with the same run_id is already
  /// present. Returns true when a line was written.
  bool AppendIfAbsent(const std::string& run_id, const std::string& json_line) const;
  std::vector<std::string> ReadLines() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace hdg

#endif  // HDG_CLI_H_
