#pragma once

#include <stdexcept>
#include <string>

namespace tkg {

// Base for every error raised by the library. The CLI maps subclasses to
// exit codes (see tools/tkg_main.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IntervalError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ReferentialError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PreconditionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class OracleFormatError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class NoAnswerError : public Error {
public:
    using Error::Error;
};

} // namespace tkg
