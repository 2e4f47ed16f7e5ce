#pragma once
// Error taxonomy shared across the library.
//
// ConfigError maps to CLI exit code 1 (bad user input: malformed config,
// unknown keys, out-of-range parameters). NumericalError maps to exit code 2
// (a computation that cannot proceed: non-PSD covariance after jitter,
// quadrature domain violations, degenerate sample sets).

#include <stdexcept>
#include <string>

namespace mvfbm {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mvfbm
