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

#include "stub_server.hpp"

#include <mutex>
#include <stdexcept>
#include <thread>

// Same configuration as the library build so both translation units agree
// on httplib's class layouts.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace aqeval::testing {

struct StubServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  Handler handler;
  mutable std::mutex mu;
  std::string last_body;
  httplib::Headers last_headers;
};

StubServer::StubServer(Handler handler) : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  impl_->server.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
    const int call = calls_.fetch_add(1);
    {
      std::lock_guard<std::mutex> lock(impl_->mu);
      impl_->last_body = req.body;
      impl_->last_headers = req.headers;
    }
    const StubReply reply = impl_->handler(req.body, call);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port <= 0) throw std::runtime_error("stub server could not bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

StubServer::~StubServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + path;
}

std::string StubServer::last_body() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->last_body;
}

std::string StubServer::last_header(const std::string& name) const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  const auto it = impl_->last_headers.find(name);
  return it == impl_->last_headers.end() ? std::string() : it->second;
}

}  // namespace aqeval::testing
