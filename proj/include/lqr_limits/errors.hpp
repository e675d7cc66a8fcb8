#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lqr_limits {

enum class ErrorKind {
    Validation,
    Instability,
    NumericalFailure,
    NonConvergence,
    DegenerateInput,
    PerturbationTooLarge,
    ExcitationDeficient,
    BallTooLarge,
    Precondition,
    Divergence,
    AllTrialsFailed,
    Config,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::Instability: return "instability error";
        case ErrorKind::NumericalFailure: return "numerical failure";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::DegenerateInput: return "degenerate input";
        case ErrorKind::PerturbationTooLarge: return "perturbation too large";
        case ErrorKind::ExcitationDeficient: return "excitation deficient";
        case ErrorKind::BallTooLarge: return "ball too large";
        case ErrorKind::Precondition: return "precondition violated";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::AllTrialsFailed: return "all trials failed";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

}  // namespace lqr_limits
