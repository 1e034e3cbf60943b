#pragma once

#include <stdexcept>
#include <string>

namespace arank {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad parameter, dimension mismatch, or out-of-range argument.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed text input (edge lists, config files, vectors).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Invalid key/value in a run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Violation of the engine/termination message contract.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Malformed simulation or scenario script.
class ScriptError : public Error {
public:
    using Error::Error;
};

// Failure in the message transport layer.
class TransportError : public Error {
public:
    using Error::Error;
};

} // namespace arank
