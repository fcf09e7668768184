#include "embalign/error.hpp"

#include <sstream>

namespace embalign {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kDegenerateRow: return "DegenerateRow";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kZeroCentroid: return "ZeroCentroid";
    case ErrorCode::kZeroAnchor: return "ZeroAnchor";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kTooFewPairs: return "TooFewPairs";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kSpecInvalid: return "SpecInvalid";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kNonRectangularCsv: return "NonRectangularCsv";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

namespace {

std::string describe_rows(const std::vector<std::int64_t>& rows) {
  std::ostringstream os;
  os << rows.size() << " row(s) have zero norm after centering: ";
  constexpr std::size_t kShown = 20;
  for (std::size_t i = 0; i < rows.size() && i < kShown; ++i) os << (i ? ", " : "") << rows[i];
  if (rows.size() > kShown) os << ", ...";
  return os.str();
}

}  // namespace

DegenerateRowError::DegenerateRowError(std::vector<std::int64_t> rows)
    : Error(ErrorCode::kDegenerateRow, describe_rows(rows)), rows_(std::move(rows)) {}

ConfigError::ConfigError(std::string field, const std::string& message)
    : Error(ErrorCode::kInvalidConfig, field + ": " + message), field_(std::move(field)) {}

}  // namespace embalign
