#pragma once

#include <stdexcept>
#include <string>

namespace maserrx {

// Invalid argument to a single operation (nonpositive frequency, negative power, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid or inconsistent configuration; carries the full violation text.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integration produced NaN/Inf or exceeded drift bounds.
struct NumericalError : std::runtime_error {
    NumericalError(const std::string& what, double last_good_time_s)
        : std::runtime_error(what), last_good_time(last_good_time_s) {}
    double last_good_time = 0.0;  // s, last sample before the blowup
};

// Fock-space truncation invalidated the run; suggests a larger cutoff.
struct TruncationError : std::runtime_error {
    TruncationError(const std::string& what, int suggested)
        : std::runtime_error(what), suggested_dim_fock(suggested) {}
    int suggested_dim_fock = 0;
};

// Requested operator/state dimensions exceed the memory cap.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Least-squares fit could not be performed or did not converge.
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A composed experiment cannot run as configured (e.g. self-oscillating receiver).
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failures while emitting results.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace maserrx
