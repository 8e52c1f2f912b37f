#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace minreg {

enum class ErrorCode {
  NotPositiveDefinite,
  RankDeficient,
  Singular,
  NoConvergence,
  DimensionMismatch,
  NonFinite,
  SingularBlock,
  NotCausal,
  CausalityViolation,
  NotClairvoyant,
  Infeasible,
  MaxIterations,
  WorstCaseNeedsObserver,
  Parse,
  Io,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::NotCausal: return "NotCausal";
    case ErrorCode::CausalityViolation: return "CausalityViolation";
    case ErrorCode::NotClairvoyant: return "NotClairvoyant";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::WorstCaseNeedsObserver: return "WorstCaseNeedsObserver";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Library-wide exception. The code identifies the failure class; the
/// message carries the details.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace minreg
