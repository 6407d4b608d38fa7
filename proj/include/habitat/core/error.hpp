// Copyright 2026 The Habitat Forge Authors.
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

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace habitat {

enum class ErrorCode {
  // corpus
  MissingFile,
  MalformedRecord,
  DuplicatePath,
  DuplicateClass,
  ClassIndexOutOfRange,
  InvalidBBox,
  UnknownClassName,
  EmptyDescriptor,
  NameNotFound,
  MissingScientificName,
  BadFormat,
  // textcluster
  TooFewDocuments,
  KOutOfRange,
  RangeEmpty,
  // composite
  DimensionMismatch,
  SupportViolation,
  FullMask,
  ZeroDimension,
  // augment
  MissingMask,
  NoEligibleSource,
  GroupsMissing,
  IoFailure,
  // perturb
  MissingBBox,
  InpainterFailure,
  // flybird
  UnknownId,
  MissingPanoptic,
  InvalidRule,
  // prompt
  EmptyName,
  UncoveredClass,
  AmbiguousMatch,
  // zseval
  DimMismatch,
  ZeroVector,
  MissingLabel,
  InsufficientSupport,
  SeedStreamMismatch,
  ClassSetMismatch,
  // cli
  LayoutMismatch,
  InvalidConfig,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::DuplicateClass: return "DuplicateClass";
    case ErrorCode::ClassIndexOutOfRange: return "ClassIndexOutOfRange";
    case ErrorCode::InvalidBBox: return "InvalidBBox";
    case ErrorCode::UnknownClassName: return "UnknownClassName";
    case ErrorCode::EmptyDescriptor: return "EmptyDescriptor";
    case ErrorCode::NameNotFound: return "NameNotFound";
    case ErrorCode::MissingScientificName: return "MissingScientificName";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::TooFewDocuments: return "TooFewDocuments";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::RangeEmpty: return "RangeEmpty";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::FullMask: return "FullMask";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::MissingMask: return "MissingMask";
    case ErrorCode::NoEligibleSource: return "NoEligibleSource";
    case ErrorCode::GroupsMissing: return "GroupsMissing";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MissingBBox: return "MissingBBox";
    case ErrorCode::InpainterFailure: return "InpainterFailure";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::MissingPanoptic: return "MissingPanoptic";
    case ErrorCode::InvalidRule: return "InvalidRule";
    case ErrorCode::EmptyName: return "EmptyName";
    case ErrorCode::UncoveredClass: return "UncoveredClass";
    case ErrorCode::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::InsufficientSupport: return "InsufficientSupport";
    case ErrorCode::SeedStreamMismatch: return "SeedStreamMismatch";
    case ErrorCode::ClassSetMismatch: return "ClassSetMismatch";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. `instance()` names the
/// record the failure is about (an image id, a class name, a file path) and
/// `line()` is the 1-based source line for parse errors, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string instance = {},
        std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message),
        instance_(std::move(instance)),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& instance() const noexcept { return instance_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::string instance_;
  std::size_t line_;
};

}  // namespace habitat
