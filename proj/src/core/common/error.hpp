// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace molswap {

enum class ErrorCode {
  kSyntax,
  kUnsupportedFeature,
  kValence,
  kNotConnected,
  kNotBonded,
  kTimeOutOfRange,
  kInfeasibleMove,
  kNoFeasibleMove,
  kDimensionMismatch,
  kNonFiniteGradient,
  kCorruptFile,
  kVersionMismatch,
  kEmptyDataset,
  kInfeasibleFormula,
  kEmptySample,
  kEmptyLog,
  kInvalidArgument,
  kIo,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the core library. The code is what callers branch
// on; the message is for humans. Parser errors carry the byte offset.
class Error : public std::runtime_error {
 public:
  static constexpr std::size_t kNoPosition = static_cast<std::size_t>(-1);

  Error(ErrorCode code, const std::string& message, std::size_t position = kNoPosition)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::size_t position_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace molswap
