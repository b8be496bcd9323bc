// lidarup - temporal LIDAR upsampling from a mono camera
//
// Error type shared by every module.

#ifndef LIDARUP_ERROR_HPP
#define LIDARUP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lidarup {

enum class ErrorCode {
  kSizeMismatch,
  kDimensionMismatch,
  kInvalidArgument,
  kDegenerateConfiguration,
  kInsufficientCorrespondences,
  kNoConsensus,
  kNoValidModel,
  kEmptyCloud,
  kParse,
  kMalformedLength,
  kIo,
  kNonMonotoneTimestamps,
  kMissingCalibration,
  kDuplicateCalibration,
  kInvalidPlan,
  kConfig,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSizeMismatch: return "size-mismatch";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kInsufficientCorrespondences: return "insufficient-correspondences";
    case ErrorCode::kNoConsensus: return "no-consensus";
    case ErrorCode::kNoValidModel: return "no-valid-model";
    case ErrorCode::kEmptyCloud: return "empty-cloud";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kMalformedLength: return "malformed-length";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNonMonotoneTimestamps: return "non-monotone-timestamps";
    case ErrorCode::kMissingCalibration: return "missing-calibration";
    case ErrorCode::kDuplicateCalibration: return "duplicate-calibration";
    case ErrorCode::kInvalidPlan: return "invalid-plan";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lidarup

#endif  // LIDARUP_ERROR_HPP
