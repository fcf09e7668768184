#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace embalign {

enum class ErrorCode {
  kEmptyInput,
  kDegenerateRow,
  kDimensionMismatch,
  kLengthMismatch,
  kShapeMismatch,
  kNonFiniteInput,
  kTooFewPoints,
  kZeroCentroid,
  kZeroAnchor,
  kKTooLarge,
  kTooFewPairs,
  kInvalidConfig,
  kSpecInvalid,
  kBadMagic,
  kTruncatedPayload,
  kNonRectangularCsv,
  kNonFiniteValue,
  kChecksumMismatch,
  kVersionUnsupported,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library.
///
/// `stage()` is empty unless the error escaped from one of the stages run by
/// `fit()`, in which case it names that stage ("normalize", "anchors", ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  ErrorCode code_;
  std::string stage_;
};

/// Rows whose centered norm is (numerically) zero. The caller may drop them.
class DegenerateRowError : public Error {
 public:
  explicit DegenerateRowError(std::vector<std::int64_t> rows);

  const std::vector<std::int64_t>& rows() const noexcept { return rows_; }

 private:
  std::vector<std::int64_t> rows_;
};

/// A hyperparameter failed validation; `field()` is the config key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message);

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace embalign
