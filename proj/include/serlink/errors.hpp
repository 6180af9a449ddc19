#pragma once

#include <stdexcept>
#include <string>

namespace serlink {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Recycling loop gain τ·c·z reached 1, so the harvested-power fixed point diverges.
class EnergyLoopError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Iterative method (series, root finder, optimizer) failed to converge.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

/// Power budget cannot support the requested configuration.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Two independent evaluation routes disagree beyond their tolerance.
class DisagreementError : public Error {
public:
    DisagreementError(const std::string& what, double a, double b)
        : Error(what), first_(a), second_(b) {}
    double first() const noexcept { return first_; }
    double second() const noexcept { return second_; }

private:
    double first_;
    double second_;
};

}  // namespace serlink
