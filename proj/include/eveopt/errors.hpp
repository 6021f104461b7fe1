#pragma once

#include <stdexcept>
#include <string>

namespace eveopt {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (hyper-parameter out of range, bad grid, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Vector/matrix dimension mismatch.
struct ShapeError : Error {
    using Error::Error;
};

// Gradient contains NaN/Inf entries.
struct InvalidGradientError : Error {
    using Error::Error;
};

// Optimizer state violates an invariant (e.g. negative velocity).
struct StateError : Error {
    using Error::Error;
};

// Filesystem / serialization failure.
struct IoError : Error {
    using Error::Error;
};

} // namespace eveopt
