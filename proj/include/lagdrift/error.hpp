// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lagdrift {

enum class ErrorCode {
    // configuration
    InvalidArgument,
    ConfigError,
    // data / file format
    MalformedHeader,
    NonMonotoneAxes,
    NonUniformGrid,
    SizeMismatch,
    MissingColumn,
    UnorderedTimestamps,
    ParseError,
    IoError,
    RunMismatch,
    // sampling
    OutOfDomain,
    MaskedSupport,
    InsufficientMargin,
    EquatorialBand,
    // numerics
    NumericalFailure,
    SplitInfeasible,
    EmptyInput,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type used across the library. `code()` identifies the failure
/// class; the CLI maps it onto process exit codes.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace lagdrift
