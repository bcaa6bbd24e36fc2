// Copyright 2026  aqeval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Content-addressed response cache: <dir>/<key[0:2]>/<key>.json. Entries are
// written to a temporary name and renamed into place, so concurrent readers
// never observe a partial file and the last writer for a key wins.

#include <filesystem>
#include <optional>
#include <string>

#include "aqeval/judges.hpp"

namespace aqeval {

class ResponseCache {
 public:
  // An unusable directory leaves the cache disabled; warning() says why.
  explicit ResponseCache(std::filesystem::path dir);

  bool enabled() const { return enabled_; }
  const std::string& warning() const { return warning_; }

  // nullopt on a miss. An unreadable or corrupt entry counts as a miss.
  std::optional<JudgeResponse> get(const std::string& key) const;
  // Returns false when the entry could not be written.
  bool put(const std::string& key, const JudgeResponse& response) const;

  std::filesystem::path entry_path(const std::string& key) const;

 private:
  std::filesystem::path dir_;
  bool enabled_ = false;
  std::string warning_;
};

}  // namespace aqeval
