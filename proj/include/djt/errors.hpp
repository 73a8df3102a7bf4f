// errors.hpp — exception taxonomy shared by the library and the CLI

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace djt {

// Invalid configuration, parameters or input files. CLI exit code 2.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed data file; carries the offending 1-based row when known.
struct ParseError : ConfigError {
    std::size_t row = 0;
    ParseError(const std::string& msg, std::size_t bad_row)
        : ConfigError(msg + " (row " + std::to_string(bad_row) + ")"), row(bad_row) {}
    explicit ParseError(const std::string& msg) : ConfigError(msg) {}
};

// Numeric failure at runtime (diverged solve, quadrature, ...). CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least-squares driver failed to converge or produced a degenerate fit.
struct FitError : NumericError {
    using NumericError::NumericError;
};

// Requested quantity is undefined inside a flagged flux window
// (state labels ambiguous near an avoided crossing).
struct FluxWindowError : NumericError {
    double phi0 = 0.0;
    FluxWindowError(const std::string& msg, double phi0_value)
        : NumericError(msg), phi0(phi0_value) {}
};

// Dispersive perturbation theory invalid: detuning below the configured guard.
struct DispersiveBreakdownError : NumericError {
    using NumericError::NumericError;
};

} // namespace djt
