#include "blight/error.hpp"

namespace blight {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kChannel: return "channel error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kAlignment: return "alignment error";
    case ErrorCode::kStratification: return "stratification error";
    case ErrorCode::kTraining: return "training error";
    case ErrorCode::kConvergence: return "convergence error";
    case ErrorCode::kConfiguration: return "configuration error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kEmptyEvaluation: return "empty evaluation";
    case ErrorCode::kNumerical: return "numerical error";
    case ErrorCode::kArgument: return "invalid argument";
  }
  return "unknown error";
}

}  // namespace blight
