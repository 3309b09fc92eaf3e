#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nkh {

enum class ErrorKind {
  NonPositiveMuSq,
  StepSizeUnderflow,
  RhsDomainError,
  NoEventFound,
  ComplexSpectrum,
  ValidationFailed,
  NoSignChange,
  NuOutOfRange,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveMuSq: return "NonPositiveMuSq";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::RhsDomainError: return "RhsDomainError";
    case ErrorKind::NoEventFound: return "NoEventFound";
    case ErrorKind::ComplexSpectrum: return "ComplexSpectrum";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::NuOutOfRange: return "NuOutOfRange";
  }
  return "Unknown";
}

/// Every numeric failure in the library carries one of the kinds above.
class NumericError : public std::runtime_error {
 public:
  NumericError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nkh
