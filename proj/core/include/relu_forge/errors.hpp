#pragma once

#include <stdexcept>
#include <string>

namespace relu_forge {

// Malformed input that could not be parsed (expression text, JSON documents).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally well-formed input that violates a semantic precondition.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch between networks or between a network and its data.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested construction cannot be carried out with the given arguments.
class BuildError : public std::runtime_error {
public:
    explicit BuildError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluating an expression (pointwise or over an interval) left its domain,
// e.g. ln of a non-positive range or division by a range containing zero.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace relu_forge
