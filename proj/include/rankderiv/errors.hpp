#pragma once

#include <stdexcept>
#include <string>

namespace rankderiv {

// Caller passed mismatched fields/dimensions or malformed input.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed literal, matrix file or delta-table file.
class ParseError : public UsageError {
public:
    explicit ParseError(const std::string& what) : UsageError(what) {}
};

// Mathematically undefined operation: division by zero, evaluating a map
// outside its declared domain.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// A documented precondition of an operation does not hold (rank bounds etc.).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Instance too large for exhaustive treatment.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// A structural identity that every multiplicative derivation on rank-s
// matrices must satisfy failed during extraction.
class ExtractionError : public std::runtime_error {
public:
    ExtractionError(std::string identity, const std::string& detail)
        : std::runtime_error(identity + ": " + detail), identity_(std::move(identity)) {}

    const std::string& identity() const noexcept { return identity_; }

private:
    std::string identity_;
};

}  // namespace rankderiv
