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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace aqeval {

// Base of every error the harness raises on purpose. The CLI maps subclasses
// onto exit codes, so new error kinds should derive from one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON, TOML, template front matter).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Data that parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> ids = {})
      : Error(what), ids_(std::move(ids)) {}
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Dangling cross reference: unknown task id, orphan response id.
class ReferenceError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Augmentation attempted on a non-train record.
class IsolationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TemplateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Configuration file does not satisfy the expected schema.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AudioError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Rejected credentials on a remote backend. Aborts a run instead of being
// counted as a per-record failure.
class AuthError : public Error {
 public:
  using Error::Error;
};

}  // namespace aqeval
