#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace antic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input. Carries the 1-based line number of the offending row.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a data invariant (negative RT, duplicates, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Inconsistent or unsupported configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Binary dump files: bad magic, truncation, normalization violations.
class FormatError : public Error {
public:
    using Error::Error;
};

// Mathematical precondition violated (negative probability, k <= 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class InfiniteSurprisalError : public DomainError {
public:
    using DomainError::DomainError;
};

// API misuse by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

}  // namespace antic
