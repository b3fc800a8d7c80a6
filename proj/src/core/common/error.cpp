// SPDX-License-Identifier: Apache-2.0
#include "common/error.hpp"

namespace molswap {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSyntax: return "SyntaxError";
    case ErrorCode::kUnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::kValence: return "ValenceError";
    case ErrorCode::kNotConnected: return "NotConnected";
    case ErrorCode::kNotBonded: return "NotBonded";
    case ErrorCode::kTimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::kInfeasibleMove: return "InfeasibleMove";
    case ErrorCode::kNoFeasibleMove: return "NoFeasibleMove";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInfeasibleFormula: return "InfeasibleFormula";
    case ErrorCode::kEmptySample: return "EmptySample";
    case ErrorCode::kEmptyLog: return "EmptyLog";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace molswap
