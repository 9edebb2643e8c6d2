#include "triproxy/error.hpp"

namespace triproxy {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownAxis: return "UnknownAxis";
    case ErrorCode::AxisMismatch: return "AxisMismatch";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::MissingRole: return "MissingRole";
    case ErrorCode::MissingLevels: return "MissingLevels";
    case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorCode::TauOutOfRange: return "TauOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ZeroConditioningCell: return "ZeroConditioningCell";
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EigenGapExhausted: return "EigenGapExhausted";
    case ErrorCode::ComplexResidual: return "ComplexResidual";
    case ErrorCode::NegativeMass: return "NegativeMass";
    case ErrorCode::SolveIllConditioned: return "SolveIllConditioned";
    case ErrorCode::NonStochasticSolution: return "NonStochasticSolution";
    case ErrorCode::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorCode::AlphaCollision: return "AlphaCollision";
    case ErrorCode::NoLatentState: return "NoLatentState";
    case ErrorCode::NoTripleProxyDesign: return "NoTripleProxyDesign";
    case ErrorCode::GoldenMismatch: return "GoldenMismatch";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownAxis:
    case ErrorCode::AxisMismatch:
    case ErrorCode::UnknownNode:
    case ErrorCode::MissingRole:
    case ErrorCode::MissingLevels:
    case ErrorCode::NonBinaryTreatment:
    case ErrorCode::TauOutOfRange:
    case ErrorCode::ParseError:
    case ErrorCode::EnumerationTooLarge:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, std::string message, std::string assumption, std::string context)
    : std::runtime_error(render(code, message, assumption, context)),
      code_(code),
      message_(std::move(message)),
      assumption_(std::move(assumption)),
      context_(std::move(context)) {}

Error Error::with_assumption(std::string assumption) const {
  if (!assumption_.empty()) return *this;
  return Error(code_, message_, std::move(assumption), context_);
}

Error Error::reassigned(std::string assumption) const {
  return Error(code_, message_, std::move(assumption), context_);
}

Error Error::with_context(const std::string& where) const {
  return Error(code_, message_, assumption_, context_.empty() ? where : where + "/" + context_);
}

std::string Error::render(ErrorCode code, const std::string& message, const std::string& assumption,
                          const std::string& context) {
  std::string out(to_string(code));
  if (!context.empty()) out += " [" + context + "]";
  out += ": " + message;
  if (!assumption.empty()) out += " (" + assumption + ")";
  return out;
}

}  // namespace triproxy
