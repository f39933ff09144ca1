#pragma once

#include <stdexcept>
#include <string>

namespace semigroup {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameters, violated endpoint constraints,
/// unknown names.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input outside an operation's mathematical domain (p < 1, f <= 0, ...).
class DomainError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Refusal to evaluate an expectation formula whose true-martingale
/// hypotheses are not declared.
class GateRefusal : public Error {
public:
    GateRefusal(const std::string& hypothesis)
        : Error("martingale gate refused: hypothesis '" + hypothesis + "' not established"),
          hypothesis_(hypothesis) {}
    const std::string& hypothesis() const { return hypothesis_; }

private:
    std::string hypothesis_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class DegeneracyError : public NumericalError {
public:
    DegeneracyError(double sigma_min)
        : NumericalError("bundle map is degenerate: sigma_min = " + std::to_string(sigma_min)),
          sigma_min_(sigma_min) {}
    double sigma_min() const { return sigma_min_; }

private:
    double sigma_min_;
};

class ExplosionError : public NumericalError {
public:
    ExplosionError(std::size_t aborted)
        : NumericalError(std::to_string(aborted) + " path(s) left the safe region"),
          aborted_(aborted) {}
    std::size_t aborted_paths() const { return aborted_; }

private:
    std::size_t aborted_;
};

class ChartBoundaryError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConditioningError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Kernel-weighted conditioning retained too few effective samples.
class InsufficientConditioningError : public NumericalError {
public:
    InsufficientConditioningError(double ess, double minimum)
        : NumericalError("effective sample size " + std::to_string(ess) +
                         " below minimum " + std::to_string(minimum)) {}
};

/// A geometric cross-check of a model exceeded its tolerance.
class ValidationFailure : public Error {
public:
    ValidationFailure(const std::string& identity, const std::string& detail)
        : Error("validation failure: " + identity + " (" + detail + ")"), identity_(identity) {}
    const std::string& identity() const { return identity_; }

private:
    std::string identity_;
};

}  // namespace semigroup
