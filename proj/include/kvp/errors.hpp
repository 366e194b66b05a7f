#pragma once

#include <stdexcept>
#include <string>

namespace kvp {

// Exit-code mapping used by the CLI: BadInput -> 4, SolverFailure -> 3,
// InvariantViolation -> 2.
struct BadInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
    explicit SolverFailure(const std::string& msg, double residual = 0.0)
        : std::runtime_error(msg), final_residual(residual) {}
    double final_residual;
};

struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace kvp
