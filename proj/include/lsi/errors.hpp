#pragma once

#include <stdexcept>
#include <string>

namespace lsi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or size disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Invalid or inconsistent configuration value.
struct ConfigError : Error {
    using Error::Error;
};

/// API misuse (e.g. backward on a non-scalar).
struct UsageError : Error {
    using Error::Error;
};

/// NaN/Inf or other numeric breakdown during computation.
struct NumericError : Error {
    using Error::Error;
};

/// File or stream problem.
struct IoError : Error {
    using Error::Error;
};

/// Degenerate calibration input (e.g. zero white reading).
struct CalibrationError : Error {
    using Error::Error;
};

/// Value outside the physical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

} // namespace lsi
