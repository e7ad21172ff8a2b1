#pragma once

#include <stdexcept>
#include <string>

namespace twpa {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bias or pump current at or above the critical current.
class SuperconductivityBroken : public DomainError {
public:
    using DomainError::DomainError;
};

/// Invalid or inconsistent configuration; `what()` names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure of a numerical procedure (integration, root bracketing, fitting).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StiffSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OscillationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Malformed input file (trace or gain CSV).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace twpa
