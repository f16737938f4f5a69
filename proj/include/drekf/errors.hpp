#pragma once

#include <stdexcept>
#include <string>

namespace drekf {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite matrix or vector entries.
class NumericInputError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// A covariance whose spectrum falls below the clamping tolerance.
class NotPsdError : public Error {
public:
    using Error::Error;
};

/// Raised by measurement models evaluated at a singular point
/// (range below the floor, robot on top of a beacon).
class SingularMeasurementError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration. `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// File-system failure; the message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

/// An iterative solver ran out of iterations. Carries the stage index when
/// raised from inside a filter.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, int stage = -1)
        : Error(stage >= 0 ? what + " (stage " + std::to_string(stage) + ")" : what), stage_(stage) {}

    int stage() const noexcept { return stage_; }

private:
    int stage_;
};

}  // namespace drekf
