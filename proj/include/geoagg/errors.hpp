#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geoagg {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  DegenerateVector,
  AntipodalDirections,
  DegenerateInit,
  NonConvergence,
  InvalidBundle,
  AllDegenerate,
  InvalidAngle,
  BinMismatch,
  ShapeMismatch,
  SinkFailure,
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  InvalidHeader,
  TruncatedFile,
  TrailingBytes,
  NonFiniteValue,
  NegativeWeight,
  ZeroWeightSum,
  WeightSumMismatch,
};

/// Stable identifier for an error code, e.g. "BadMagic". Used verbatim in CLI diagnostics.
std::string_view error_name(ErrorCode code);

/// Single exception type for the library. `what()` reads "<Name>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail,
        std::optional<std::uint64_t> record_index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }
  /// Set for dump-format errors that can be attributed to a record.
  std::optional<std::uint64_t> record_index() const noexcept { return record_index_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> record_index_;
};

}  // namespace geoagg
