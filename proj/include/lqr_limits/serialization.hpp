#pragma once

// JSON / CSV encoding of library records. Matrices are row-major nested
// arrays; doubles are written in shortest round-trip form.

#include <string>

#include <json.hpp>

#include "lqr_limits/bounds.hpp"
#include "lqr_limits/lti_core.hpp"
#include "lqr_limits/perturbation.hpp"
#include "lqr_limits/simulator.hpp"

namespace lqr_limits {

using Json = nlohmann::ordered_json;

[[nodiscard]] Json matrix_to_json(const Matrix& M);
// `field` names the value in error messages. Throws Config.
[[nodiscard]] Matrix matrix_from_json(const Json& j, const std::string& field);

[[nodiscard]] Json system_to_json(const SystemInstance& sys);
// Cross-validates dimensions and runs SystemInstance::validate().
[[nodiscard]] SystemInstance system_from_json(const Json& j, const std::string& field = "system");

[[nodiscard]] Json basis_to_json(const PerturbationBasis& basis);
[[nodiscard]] PerturbationBasis basis_from_json(const Json& j, int state_dim, int input_dim,
                                                const std::string& field = "basis");

[[nodiscard]] Json report_to_json(const BoundReport& report);
[[nodiscard]] Json stats_to_json(const MonteCarloStats& stats);

// Shortest decimal string that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

}  // namespace lqr_limits
