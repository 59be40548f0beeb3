#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hess {

// Argument outside the mathematical domain of a model.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class LoadOutOfRange : public DomainError {
public:
    using DomainError::DomainError;
};

// A storage energy left its [lower, upper] envelope.
class EnvelopeViolation : public std::runtime_error {
public:
    EnvelopeViolation(const std::string& what, double energy, double lower, double upper)
        : std::runtime_error(what), energy_(energy), lower_(lower), upper_(upper) {}
    double energy() const { return energy_; }
    double lower() const { return lower_; }
    double upper() const { return upper_; }

private:
    double energy_, lower_, upper_;
};

class ExclusivityViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AlignmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IncompatibleStep : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class GapError : public std::runtime_error {
public:
    explicit GapError(std::int64_t timestamp)
        : std::runtime_error("gap or non-uniform step at epoch " + std::to_string(timestamp)),
          timestamp_(timestamp) {}
    std::int64_t timestamp() const { return timestamp_; }

private:
    std::int64_t timestamp_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Layer QP could not be solved even after the clamp and saturation fallbacks.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Power ledger does not close or a device state left its envelope mid-run.
class LedgerFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hess
