#pragma once

#include <stdexcept>
#include <string>

namespace fracwave {

/// Raised when an argument violates an operation's domain (named field in the message).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot deliver a trustworthy value.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double error_estimate)
        : std::runtime_error(what), error_estimate_(error_estimate) {}

    double error_estimate() const noexcept { return error_estimate_; }

private:
    double error_estimate_;
};

} // namespace fracwave
