#include "geoagg/errors.hpp"

namespace geoagg {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::AntipodalDirections: return "AntipodalDirections";
    case ErrorCode::DegenerateInit: return "DegenerateInit";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::InvalidBundle: return "InvalidBundle";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::InvalidAngle: return "InvalidAngle";
    case ErrorCode::BinMismatch: return "BinMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SinkFailure: return "SinkFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::InvalidHeader: return "InvalidHeader";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::ZeroWeightSum: return "ZeroWeightSum";
    case ErrorCode::WeightSumMismatch: return "WeightSumMismatch";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& detail,
                           std::optional<std::uint64_t> record_index) {
  std::string msg(error_name(code));
  if (record_index) msg += " (record " + std::to_string(*record_index) + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& detail,
             std::optional<std::uint64_t> record_index)
    : std::runtime_error(format_message(code, detail, record_index)),
      code_(code),
      record_index_(record_index) {}

}  // namespace geoagg
