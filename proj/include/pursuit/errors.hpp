#pragma once

#include <stdexcept>
#include <string>

namespace pursuit {

// Error taxonomy. The CLI maps capacity_error to exit code 2 and every other
// failure to exit code 1, so keep new error types inside this family.

// Caller passed something outside the documented domain (bad sizes, indices
// out of range, nonpositive SNR target, ...).
struct input_domain_error : std::invalid_argument {
    explicit input_domain_error(const std::string& what) : std::invalid_argument(what) {}
};

// The math ran into a degenerate system, e.g. a rank-deficient column
// submatrix in a least-squares solve.
struct degenerate_system_error : std::runtime_error {
    explicit degenerate_system_error(const std::string& what) : std::runtime_error(what) {}
};

// A requested computation exceeds a configured resource cap (subset
// enumeration budgets and the like). Deliberately distinct from input errors
// so callers can raise the cap instead of fixing the input.
struct capacity_error : std::runtime_error {
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Two pieces of data that must describe the same instance disagree
// (e.g. a recorded trace does not replay against the supplied matrix).
struct consistency_error : std::runtime_error {
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

// A condition formula was evaluated outside its hypothesis region
// (the condition is inapplicable there, not false).
struct hypothesis_error : std::invalid_argument {
    explicit hypothesis_error(const std::string& what) : std::invalid_argument(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace pursuit
