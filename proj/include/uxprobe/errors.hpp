#pragma once

#include <stdexcept>
#include <string>

namespace uxprobe {

/// Base class for all uxprobe errors. `category()` is the stable
/// machine-parsable tag used in CLI diagnostics ("[uxprobe:<category>] ...").
class Error : public std::runtime_error {
public:
    explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
    virtual const char* category() const noexcept { return "error"; }
};

/// A value violated a type or field invariant (bad Likert item, bad status
/// string, out-of-range coordinate, ...). The message names the offender.
class ValidationError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "validation"; }
};

/// Input text could not be parsed. Carries a 1-based line number when the
/// source is a line-oriented file, -1 otherwise.
class ParseError : public Error {
public:
    explicit ParseError(std::string message, int line = -1)
        : Error(std::move(message)), line_(line) {}
    const char* category() const noexcept override { return "parse"; }
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A session log or update violated a structural invariant (index gap,
/// multi-item checklist delta, illegal status transition).
class IntegrityError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "integrity"; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "config"; }
};

/// Scripted fixture misuse: underrun, overrun, or role divergence.
class FixtureError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "fixture"; }
};

class GatewayError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "gateway"; }
};

class DriverError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "driver"; }
};

}  // namespace uxprobe
