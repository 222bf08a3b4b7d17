#pragma once

#include <stdexcept>
#include <string>

namespace snapdyn {

// Base class for all library errors. Subclasses exist so that callers (and the
// CLI) can map failure families to distinct exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: nonpositive geometry, length mismatches, out-of-range
// tolerances, malformed configuration.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Buckling-mode basis has no closed-form eigenvalue for the requested index
// (even indices above 6); extrapolation is deliberately not attempted.
class UnsupportedMode : public ValidationError {
public:
    explicit UnsupportedMode(const std::string& msg) : ValidationError(msg) {}
};

// The arch has no fold: the critical-displacement radicand is nonpositive, so
// the force-displacement curve is monotone (monostable shallow arch).
class NotBistable : public Error {
public:
    explicit NotBistable(const std::string& msg) : Error(msg) {}
};

// Damped Newton failed to converge while solving a constrained static problem.
class NewtonDivergence : public Error {
public:
    explicit NewtonDivergence(const std::string& msg) : Error(msg) {}
};

// The fold reduction is ill-posed: the load pattern is (numerically)
// orthogonal to the soft eigenvector, so the scalar normal form carries no
// forcing term.
class DegenerateReduction : public Error {
public:
    explicit DegenerateReduction(const std::string& msg) : Error(msg) {}
};

// Special-function argument would overflow (exponentially growing branch).
class OverflowGuard : public ValidationError {
public:
    explicit OverflowGuard(const std::string& msg) : ValidationError(msg) {}
};

// Family of integration failures (distinct CLI exit code from validation).
class IntegrationError : public Error {
public:
    explicit IntegrationError(const std::string& msg) : Error(msg) {}
};

// Adaptive step size collapsed below the resolvable spacing of the time axis.
class StepSizeUnderflow : public IntegrationError {
public:
    explicit StepSizeUnderflow(const std::string& msg) : IntegrationError(msg) {}
};

// Integration horizon was reached while an event was still being awaited.
class MaxTimeExceeded : public IntegrationError {
public:
    explicit MaxTimeExceeded(const std::string& msg) : IntegrationError(msg) {}
};

// A switching event was requested from a time series that never crossed the
// detection threshold.
class NoSwitching : public IntegrationError {
public:
    explicit NoSwitching(const std::string& msg) : IntegrationError(msg) {}
};

} // namespace snapdyn
