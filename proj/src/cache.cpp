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

#include "aqeval/cache.hpp"

#include "aqeval/digest.hpp"
#include "json.hpp"

namespace aqeval {

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec || !std::filesystem::is_directory(dir_)) {
    warning_ = "cache directory " + dir_.string() + " is unusable; continuing without cache";
    return;
  }
  enabled_ = true;
}

std::filesystem::path ResponseCache::entry_path(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<JudgeResponse> ResponseCache::get(const std::string& key) const {
  if (!enabled_) return std::nullopt;
  const auto path = entry_path(key);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  try {
    return response_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool ResponseCache::put(const std::string& key, const JudgeResponse& response) const {
  if (!enabled_) return false;
  const auto path = entry_path(key);
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) return false;
  try {
    write_file_atomic(path, response_to_json(response).dump() + "\n");
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace aqeval
