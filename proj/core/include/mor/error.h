// Copyright 2026-present the mor project
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mor {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data invariant (duplicate ids, orphans).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Binary layout problems: bad magic, truncated payloads, wrong column count.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are legal but carry no information (all-zero query vector).
class DegenerateInputError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// A named item (embedding space, row id, document) is absent.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures; the message always names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mor
