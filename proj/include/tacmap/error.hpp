/* Copyright 2026 The tacmap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace tacmap {

// Exception hierarchy shared by every module. The CLI maps each leaf type to
// a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation requires.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function (negative depth,
// point outside the workspace, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Optimizer or loss produced a non-finite value.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A required file or directory does not exist.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Binary container is malformed. `kind` tells the failure modes apart.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kBadDtype, kBadVersion, kTruncated, kTrailingBytes, kBadHeader };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace tacmap
