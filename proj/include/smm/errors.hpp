#pragma once

#include <stdexcept>
#include <string>

namespace smm {

// Error taxonomy. Every throwing operation documents which of these it uses.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requested quantity does not exist in the current phase (e.g. eigenstate
// quantities past the superradiant boundary).
struct PhaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Drift matrix has a non-decaying mode; no stationary covariance exists.
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Truncated Fock basis too small for the requested state.
struct TruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite-difference step diagnostics failed (estimates at different
// orders/sides disagree beyond tolerance).
struct StepError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested Gaussian moment exceeds the engine's configured order cap.
struct OrderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// decoupled_moment called with an unsupported operator count.
struct ArityError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Extrapolation ladder did not settle.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sweep/CLI configuration rejected.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace smm
