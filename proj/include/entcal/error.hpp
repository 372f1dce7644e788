// Copyright 2026 The entcal Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace entcal {

enum class ErrorCode {
  kCorpusEmpty,
  kDegenerateVocab,
  kInvalidId,
  kInvalidDistribution,
  kInvalidParameter,
  kProviderIo,
  kProtocol,
  kEmptyDataset,
  kInsufficientData,
  kZeroLength,
  kProfileMismatch,
  kUndefinedCorrelation,
  kAlignment,
  kConfig,
  kFormat,
  kIo,
};

// Stable kebab-case name used in machine-readable error lines.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace entcal
