#pragma once

#include <stdexcept>
#include <string>

namespace ionchain {

// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Any numerical failure. Subclasses narrow the cause.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, double residual)
        : NumericError(what + " (last residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Ion collision during a solve or a crystal that is not a local minimum.
class InstabilityError : public NumericError {
public:
    using NumericError::NumericError;
};

class SteadyStateError : public NumericError {
public:
    using NumericError::NumericError;
};

class FitError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace ionchain
