#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace utweak {

/// Base class of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is a 0-based byte offset.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t pos)
        : Error(what + " at position " + std::to_string(pos)), pos_(pos) {}
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

/// Evaluation outside the domain of an elementary function.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what, int component = -1)
        : Error(component < 0 ? what : what + " in component " + std::to_string(component + 1)),
          component_(component) {}
    int component() const { return component_; }

private:
    int component_;
};

/// Shapes that do not fit together (dimension or noise count).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A requested operation is not available for this model or configuration.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// An argument violates a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature did not reach the requested accuracy.
class QuadratureError : public Error {
public:
    using Error::Error;
};

}  // namespace utweak
