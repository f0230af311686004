#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bifurcata {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch, asymmetric operator, value outside an operation's domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A problem description that would break the trivial-solution family.
class InvalidSpecError : public Error {
public:
    using Error::Error;
};

/// Pencil not covered by the positive-definite or commuting-invertible routes.
class UnsupportedPencilError : public Error {
public:
    using Error::Error;
};

/// Crossing counts did not stabilize on the sampled half-neighborhoods.
class InconclusiveCrossingError : public Error {
public:
    using Error::Error;
};

/// B_{λ*}(0) has no kernel: there is nothing to cross.
class NoCandidateError : public Error {
public:
    using Error::Error;
};

/// Reduction requested at a nondegenerate critical point.
class NondegenerateError : public Error {
public:
    using Error::Error;
};

class ReductionFailedError : public Error {
public:
    ReductionFailedError(const std::string& what, std::vector<double> trace)
        : Error(what), residual_trace_(std::move(trace)) {}

    /// Residual norm after each Newton iteration.
    const std::vector<double>& residual_trace() const noexcept { return residual_trace_; }

private:
    std::vector<double> residual_trace_;
};

/// The complement Jacobian became singular: the implicit-function neighborhood was left.
class OutsideValidityError : public Error {
public:
    using Error::Error;
};

class UnsupportedDimensionError : public Error {
public:
    using Error::Error;
};

class NotEquivariantError : public Error {
public:
    using Error::Error;
};

/// An internal consistency check failed; results must not be reported.
class InvariantViolationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ConfigSyntaxError : public ConfigError {
public:
    ConfigSyntaxError(const std::string& what, std::size_t line, std::size_t column)
        : ConfigError(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ConfigSemanticError : public ConfigError {
public:
    ConfigSemanticError(const std::string& field, const std::string& what)
        : ConfigError(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace bifurcata
