// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace impactlab {

/// Base class for numerical failures (maps to CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trajectory or evaluation point left the declared price box.
class DomainEscapeError : public NumericalError {
public:
    DomainEscapeError(const std::string& where, double value, double lo, double hi);

    [[nodiscard]] double value() const noexcept { return value_; }

private:
    double value_;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Terminal fixed point y = g1(x(x,y)) had no root at the listed price nodes.
class FixedPointError : public NumericalError {
public:
    FixedPointError(const std::string& what, std::vector<double> nodes)
        : NumericalError(what), nodes_(std::move(nodes)) {}

    [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }

private:
    std::vector<double> nodes_;
};

/// Model or configuration violates a hard precondition (maps to exit code 2).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration rejected by schema validation; names the offending field (exit code 2).
class ConfigError : public InvalidArgument {
public:
    ConfigError(std::string field, const std::string& what)
        : InvalidArgument(what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Reading or writing an artifact failed (exit code 4).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace impactlab
