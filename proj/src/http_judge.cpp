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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "aqeval/digest.hpp"
#include "aqeval/error.hpp"
#include "aqeval/judges.hpp"

namespace aqeval {

using nlohmann::json;

namespace {

std::string value_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::string substitute_text(const std::string& s, const TemplateValues& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = s.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = s.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string name = s.substr(open + 2, close - open - 2);
    const auto it = values.find(name);
    if (it == values.end()) throw TemplateError("unknown request placeholder {{" + name + "}}");
    out += s.substr(pos, open - pos);
    out += value_text(it->second);
    pos = close + 2;
  }
  out += s.substr(pos);
  return out;
}

void substitute(json& node, const TemplateValues& values) {
  if (node.is_string()) {
    const auto& s = node.get_ref<const std::string&>();
    if (s.size() > 4 && s.starts_with("{{") && s.ends_with("}}") &&
        s.find("{{", 2) == std::string::npos) {
      const auto it = values.find(s.substr(2, s.size() - 4));
      if (it != values.end()) {
        node = it->second;
        return;
      }
    }
    node = substitute_text(s, values);
  } else if (node.is_array() || node.is_object()) {
    for (auto& child : node) substitute(child, values);
  }
}

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string strip_prefix(std::string s, const std::string& prefix) {
  if (!prefix.empty() && s.starts_with(prefix)) s.erase(0, prefix.size());
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

}  // namespace

std::string render_request(const std::string& request_template, const TemplateValues& values) {
  json doc;
  try {
    doc = json::parse(request_template);
  } catch (const json::exception& e) {
    throw TemplateError(std::string("request template is not valid JSON: ") + e.what());
  }
  substitute(doc, values);
  return doc.dump();
}

HttpReply post_json(const RemoteEndpoint& endpoint, const std::string& body) {
  const auto url = split_url(endpoint.url);
  httplib::Headers headers;
  if (!endpoint.auth_env_var.empty()) {
    const char* token = std::getenv(endpoint.auth_env_var.c_str());
    if (token == nullptr || *token == '\0') {
      throw AuthError("environment variable " + endpoint.auth_env_var + " is not set");
    }
    headers.emplace(endpoint.auth_header, endpoint.auth_prefix + token);
  }

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  HttpReply reply;
  const int max_attempts = std::max(1, endpoint.retry_max);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) {
      const auto delay = static_cast<long long>(endpoint.retry_base_delay_ms) << (attempt - 2);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    reply.attempts = attempt;
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      reply.status = 0;
      reply.error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    reply.status = res->status;
    reply.body = res->body;
    if (res->status == 401 || res->status == 403) {
      throw AuthError("endpoint " + endpoint.url + " rejected credentials (HTTP " +
                      std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      reply.error = "HTTP " + std::to_string(res->status);
      continue;
    }
    reply.error = res->status >= 200 && res->status < 300
                      ? std::string()
                      : "HTTP " + std::to_string(res->status);
    return reply;
  }
  reply.error += " after " + std::to_string(reply.attempts) + " attempts";
  return reply;
}

std::string response_text(const RemoteEndpoint& endpoint, const std::string& body) {
  if (endpoint.response_path.empty()) return body;
  try {
    const json doc = json::parse(body);
    const json& v = doc.at(json::json_pointer(endpoint.response_path));
    return value_text(v);
  } catch (const json::exception& e) {
    throw ParseError("cannot read " + endpoint.response_path + " from response: " + e.what());
  }
}

RemoteJudge::RemoteJudge(std::shared_ptr<const RemoteEndpoint> endpoint)
    : endpoint_(std::move(endpoint)) {
  if (!endpoint_ || endpoint_->url.empty()) throw ValidationError("remote judge needs a url");
  if (endpoint_->request_template.empty()) {
    throw ValidationError("remote judge needs a request template");
  }
  split_url(endpoint_->url);
}

JudgeResponse RemoteJudge::judge(const RenderedPrompt& prompt) {
  JudgeResponse r;
  r.record_id = prompt.record_id;
  r.backend = identity();

  std::string before;
  std::string after;
  for (std::size_t i = 0; i < prompt.segments.size(); ++i) {
    const auto& seg = prompt.segments[i];
    if (seg.kind != SegmentKind::kText) continue;
    (i == 0 ? before : after) += seg.text;
  }
  before = strip_prefix(before, prompt.markers.user);
  after = strip_prefix(after, "");

  TemplateValues values;
  values["record_id"] = prompt.record_id;
  values["text_before_audio"] = before;
  values["text_after_audio"] = after;
  values["instruction"] = before.empty() ? after : after.empty() ? before : before + " " + after;
  values["scale_min"] = prompt.scale.min;
  values["scale_max"] = prompt.scale.max;
  values["audio_mime"] = "audio/wav";

  const auto& audio = prompt.audio();
  if (endpoint_->audio_transport == AudioTransport::kBase64) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(audio.path, ec);
    if (ec) throw AudioError("cannot read audio " + audio.path.string());
    if (size > endpoint_->max_audio_bytes) {
      r.error = "audio " + audio.path.string() + " is " + std::to_string(size) +
                " bytes, over the " + std::to_string(endpoint_->max_audio_bytes) +
                "-byte payload cap";
      return r;
    }
    values["audio"] = base64_encode(read_file(audio.path));
  } else {
    values["audio"] = endpoint_->audio_url_prefix + audio.path.filename().string();
  }

  const std::string body = render_request(endpoint_->request_template, values);
  const HttpReply reply = post_json(*endpoint_, body);
  r.attempts = reply.attempts;
  if (!reply.ok()) {
    r.error = reply.error;
    return r;
  }
  try {
    r.raw_text = response_text(*endpoint_, reply.body);
  } catch (const ParseError& e) {
    r.raw_text = reply.body;
    r.error = e.what();
    return r;
  }
  r.extracted_score = extract_score(r.raw_text, prompt.scale);
  if (!r.extracted_score) r.error = "no score in response";
  return r;
}

}  // namespace aqeval
