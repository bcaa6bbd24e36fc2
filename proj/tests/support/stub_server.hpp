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

// Minimal HTTP endpoint on 127.0.0.1 for judge-client tests. The handler
// sees the request body and the zero-based call number.

#include <atomic>
#include <functional>
#include <memory>
#include <string>

namespace aqeval::testing {

struct StubReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class StubServer {
 public:
  using Handler = std::function<StubReply(const std::string& body, int call)>;

  explicit StubServer(Handler handler);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url(const std::string& path = "/v1/judge") const;
  int calls() const { return calls_.load(); }
  void reset_calls() { calls_ = 0; }
  std::string last_body() const;
  std::string last_header(const std::string& name) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<int> calls_{0};
};

}  // namespace aqeval::testing
