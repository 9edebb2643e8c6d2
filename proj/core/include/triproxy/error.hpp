#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace triproxy {

enum class ErrorCode {
  // validation
  InvalidArgument,
  UnknownAxis,
  AxisMismatch,
  UnknownNode,
  MissingRole,
  MissingLevels,
  NonBinaryTreatment,
  TauOutOfRange,
  ParseError,
  // probability algebra
  ZeroConditioningCell,
  NegativeProbability,
  EnumerationTooLarge,
  // identification
  RankDeficient,
  EigenGapExhausted,
  ComplexResidual,
  NegativeMass,
  SolveIllConditioned,
  NonStochasticSolution,
  AmbiguousMatch,
  AlphaCollision,
  NoLatentState,
  NoTripleProxyDesign,
  GoldenMismatch,
};

std::string_view to_string(ErrorCode code);

/// True for errors caused by malformed input rather than by a failed
/// identification assumption.
bool is_validation_error(ErrorCode code);

/// Every failure in the engine is reported through this type. `assumption`
/// names the identifying assumption whose numerical shadow failed (empty for
/// pure validation errors), and `context` locates the failure, e.g. "X=1".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string assumption = {}, std::string context = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& assumption() const noexcept { return assumption_; }
  const std::string& context() const noexcept { return context_; }

  /// Copy of this error with an assumption name attached (kept if already set).
  Error with_assumption(std::string assumption) const;
  /// Copy with `where` prepended to the context chain.
  Error with_context(const std::string& where) const;
  /// Copy with the assumption replaced unconditionally.
  Error reassigned(std::string assumption) const;

 private:
  static std::string render(ErrorCode code, const std::string& message, const std::string& assumption,
                            const std::string& context);

  ErrorCode code_;
  std::string message_;
  std::string assumption_;
  std::string context_;
};

}  // namespace triproxy
