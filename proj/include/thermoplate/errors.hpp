#pragma once

#include <stdexcept>
#include <string>

namespace thermoplate {

// Bad argument or violated precondition (wrong index, non-positive length, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// lambda sits on (or numerically at) the spectrum of A(xi).
class SingularParameter : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A symbol produced a non-finite value during a scan.
class EvaluationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Eigensolver non-convergence, overflow, ill-conditioned projection, failed fit.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A computed object failed one of its self-checks (e.g. root residual).
class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace thermoplate
