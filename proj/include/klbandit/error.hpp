#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace klbandit {

enum class ErrorKind {
  EmptySupport,
  ValueOutOfRange,
  WeightsNotNormalizable,
  EmptyEmpirical,
  MuOutOfRange,
  SupportTooLarge,
  NonPositiveT,
  NoArms,
  HorizonTooSmall,
  DegenerateInstance,
  NotBernoulli,
  MuStarDegenerate,
  EpsilonOutOfRange,
  MuADegenerate,
  ZeroGap,
  ParseError,
  ValidationError,
  IoError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptySupport: return "EmptySupport";
    case ErrorKind::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorKind::WeightsNotNormalizable: return "WeightsNotNormalizable";
    case ErrorKind::EmptyEmpirical: return "EmptyEmpirical";
    case ErrorKind::MuOutOfRange: return "MuOutOfRange";
    case ErrorKind::SupportTooLarge: return "SupportTooLarge";
    case ErrorKind::NonPositiveT: return "NonPositiveT";
    case ErrorKind::NoArms: return "NoArms";
    case ErrorKind::HorizonTooSmall: return "HorizonTooSmall";
    case ErrorKind::DegenerateInstance: return "DegenerateInstance";
    case ErrorKind::NotBernoulli: return "NotBernoulli";
    case ErrorKind::MuStarDegenerate: return "MuStarDegenerate";
    case ErrorKind::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorKind::MuADegenerate: return "MuADegenerate";
    case ErrorKind::ZeroGap: return "ZeroGap";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

// All library failures surface as this exception; kind() identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace klbandit
