#pragma once

#include <stdexcept>
#include <string>

namespace dkff {

enum class ErrorKind {
  kDegeneratePoints,
  kBehindCamera,
  kAtCameraCenter,
  kThroughCameraCenter,
  kLineAtInfinity,
  kSteeringSingularity,
  kInvalidArgument,
  kSingularCovariance,
  kIndefiniteNoise,
  kIndefiniteFusedPrecision,
  kKindMismatch,
  kParse,
  kInvariantViolation,
  kOffMap,
  kLengthMismatch,
  kIo,
};

const char* to_string(ErrorKind kind);

/// Every failure in the library surfaces as this exception. `kind()` is the
/// stable, testable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegeneratePoints: return "degenerate points";
    case ErrorKind::kBehindCamera: return "behind camera";
    case ErrorKind::kAtCameraCenter: return "at camera center";
    case ErrorKind::kThroughCameraCenter: return "line through camera center";
    case ErrorKind::kLineAtInfinity: return "line at infinity";
    case ErrorKind::kSteeringSingularity: return "steering singularity";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kSingularCovariance: return "singular covariance";
    case ErrorKind::kIndefiniteNoise: return "indefinite noise covariance";
    case ErrorKind::kIndefiniteFusedPrecision: return "indefinite fused precision";
    case ErrorKind::kKindMismatch: return "measurement kind mismatch";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kInvariantViolation: return "invariant violation";
    case ErrorKind::kOffMap: return "off map";
    case ErrorKind::kLengthMismatch: return "length mismatch";
    case ErrorKind::kIo: return "i/o error";
  }
  return "unknown";
}

}  // namespace dkff
