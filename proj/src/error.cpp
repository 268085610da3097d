#include "lilee/error.hpp"

namespace lilee {

ParseError::ParseError(const std::string &source, int line, const std::string &message)
    : Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + message), line_(line) {}

ValidationError::ValidationError(const std::string &invariant, const std::string &detail)
    : Error(ErrorKind::Validation, invariant + ": " + detail), invariant_(invariant) {}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Config:
        return 2;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::Data:
        return 3;
    case ErrorKind::Numerical:
        return 4;
    }
    return 1;
}

const char *to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Config:
        return "config";
    case ErrorKind::Io:
        return "io";
    case ErrorKind::Parse:
        return "parse";
    case ErrorKind::Validation:
        return "validation";
    case ErrorKind::Data:
        return "data";
    case ErrorKind::Numerical:
        return "numerical";
    }
    return "unknown";
}

} // namespace lilee
