#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace blight {

/// Failure categories shared by every module. The numeric values are part of
/// the C ABI (see blight.h) and must not be reordered.
enum class ErrorCode : int {
  kDimension = 1,
  kChannel = 2,
  kFormat = 3,
  kAlignment = 4,
  kStratification = 5,
  kTraining = 6,
  kConvergence = 7,
  kConfiguration = 8,
  kIo = 9,
  kEmptyEvaluation = 10,
  kNumerical = 11,
  kArgument = 12,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Thrown by FEATMAT1 decoding; carries the byte offset at which the file
/// stopped making sense.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error(ErrorCode::kFormat, message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// SMO ran out of its iteration budget. The final two-threshold gap is kept so
/// callers can decide whether the model is still usable.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double kkt_gap)
      : Error(ErrorCode::kConvergence, message), kkt_gap_(kkt_gap) {}

  double kkt_gap() const noexcept { return kkt_gap_; }

 private:
  double kkt_gap_;
};

}  // namespace blight
