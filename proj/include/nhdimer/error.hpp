#pragma once

#include <stdexcept>
#include <string>

namespace nhdimer {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Requested device setting outside the available hardware range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed or invalid run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A least-squares fit did not converge to an acceptable solution.
class FitFailed : public Error {
public:
    FitFailed(const std::string& what, double residual_rms, int iterations)
        : Error(what + " (residual_rms=" + std::to_string(residual_rms) +
                ", iterations=" + std::to_string(iterations) + ")"),
          residual_rms_(residual_rms),
          iterations_(iterations) {}

    [[nodiscard]] double residual_rms() const noexcept { return residual_rms_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double residual_rms_;
    int iterations_;
};

/// ODE integration aborted; carries the simulation time where it happened.
class IntegrationError : public Error {
public:
    enum class Kind { StepUnderflow, NonFinite, TooManySteps };

    IntegrationError(Kind kind, double time, const std::string& what)
        : Error(what + " at t=" + std::to_string(time) + " s"), kind_(kind), time_(time) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    Kind kind_;
    double time_;
};

}  // namespace nhdimer
