#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lts {

enum class ErrorCode {
  SingularMatrix,
  DomainError,
  DimensionMismatch,
  OnPieceBoundary,
  AllStartsDegenerate,
  TooManySubsets,
  QuadratureFailure,
  ResampleExhausted,
  ParseError,
  NonNumericCell,
  TooFewRows,
  UsageError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OnPieceBoundary: return "OnPieceBoundary";
    case ErrorCode::AllStartsDegenerate: return "AllStartsDegenerate";
    case ErrorCode::TooManySubsets: return "TooManySubsets";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ResampleExhausted: return "ResampleExhausted";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace lts
