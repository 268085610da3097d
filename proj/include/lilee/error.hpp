#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lilee {

enum class ErrorKind {
    Config,     // bad run configuration or command usage
    Io,         // filesystem failures
    Parse,      // malformed input text
    Validation, // a type invariant does not hold
    Data,       // inconsistent or incomplete input data
    Numerical,  // optimizer / solver failure
};

/// Base class for every error raised by the library. The kind decides the
/// CLI exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string &message) : Error(ErrorKind::Config, message) {}
};

class IoError : public Error {
public:
    IoError(const std::string &path, const std::string &message)
        : Error(ErrorKind::Io, path + ": " + message), path_(path) {}
    const std::string &path() const noexcept { return path_; }

private:
    std::string path_;
};

class ParseError : public Error {
public:
    ParseError(const std::string &source, int line, const std::string &message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

class ValidationError : public Error {
public:
    ValidationError(const std::string &invariant, const std::string &detail);
    const std::string &invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

class DataError : public Error {
public:
    explicit DataError(const std::string &message) : Error(ErrorKind::Data, message) {}
};

/// Raised by the iterative estimators; carries the log-likelihood trace so a
/// failed calibration can be inspected after the fact.
class NumericalError : public Error {
public:
    NumericalError(const std::string &message, std::vector<double> trace = {})
        : Error(ErrorKind::Numerical, message), trace_(std::move(trace)) {}
    const std::vector<double> &trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/// CLI exit status: 2 config, 3 data (including I/O, parse and validation), 4 numerical.
int exit_code(ErrorKind kind) noexcept;

const char *to_string(ErrorKind kind) noexcept;

} // namespace lilee
