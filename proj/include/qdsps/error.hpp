#pragma once

#include <stdexcept>
#include <string>

namespace qdsps {

// Base for every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameter or input violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Fixed-step integration did not converge under step halving.
class IntegrationError : public Error {
public:
    using Error::Error;
};

// A root / resonance / peak search found nothing in the requested window.
class SearchError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

// Estimator undefined for the given data (no side peaks, zero reference, ...).
class EstimationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition) throw ValidationError(message);
}

} // namespace qdsps
