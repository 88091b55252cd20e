#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace soundmc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model or property document (syntax level).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally well-formed document violating a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A simulation run exceeded its step cap before the property's random
/// variable was decided. Signals a violated model assumption, never a
/// silent truncation.
class SimulationCapError : public Error {
public:
    SimulationCapError(const std::string& what, std::uint64_t steps)
        : Error(what), steps_(steps) {}
    std::uint64_t steps() const { return steps_; }

private:
    std::uint64_t steps_;
};

/// A sequential procedure ran out of input samples before deciding.
class StreamExhausted : public Error {
public:
    using Error::Error;
};

/// The bounding-set episode count exceeded its configured maximum.
class HorizonError : public Error {
public:
    using Error::Error;
};

/// No method in the preference list applies to the property at hand.
class NoApplicableMethod : public Error {
public:
    using Error::Error;
};

/// An internal numeric solver failed to reach its tolerance.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace soundmc
