#pragma once

#include <stdexcept>
#include <string>

namespace fwmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// State outside the region where the aircraft dynamics are defined
/// (airspeed near zero, flight path angle near vertical).
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or malformed arguments.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Configuration could not be parsed or failed validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed to produce a usable result.
class SolverError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace fwmpc
