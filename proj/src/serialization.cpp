#include "lqr_limits/serialization.hpp"

#include <charconv>
#include <cmath>

namespace lqr_limits {

namespace {

Json finite_or_null(double value) {
    return std::isfinite(value) ? Json(value) : Json(nullptr);
}

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw Error(ErrorKind::Config, "field '" + field + "': " + what);
}

}  // namespace

Json matrix_to_json(const Matrix& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            row.push_back(finite_or_null(M(i, j)));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
    // Scalars and flat vectors are accepted as 1×1 and column matrices.
    if (j.is_number()) {
        return Matrix::Constant(1, 1, j.get<double>());
    }
    if (!j.is_array() || j.empty()) {
        config_error(field, "expected a non-empty nested array of numbers");
    }
    if (!j.front().is_array()) {
        Matrix col(static_cast<Eigen::Index>(j.size()), 1);
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) {
                config_error(field + "[" + std::to_string(i) + "]", "expected a number");
            }
            col(static_cast<Eigen::Index>(i), 0) = j[i].get<double>();
        }
        return col;
    }
    const std::size_t cols = j.front().size();
    Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const Json& row = j[r];
        if (!row.is_array() || row.size() != cols) {
            config_error(field + "[" + std::to_string(r) + "]",
                         "rows must be arrays of equal length " + std::to_string(cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number()) {
                config_error(field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                             "expected a number");
            }
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
        }
    }
    if (!M.allFinite()) {
        config_error(field, "entries must be finite");
    }
    return M;
}

Json system_to_json(const SystemInstance& sys) {
    Json j;
    j["A"] = matrix_to_json(sys.A);
    j["B"] = matrix_to_json(sys.B);
    j["Q"] = matrix_to_json(sys.Q);
    j["R"] = matrix_to_json(sys.R);
    j["Sigma_W"] = matrix_to_json(sys.Sigma_W);
    return j;
}

SystemInstance system_from_json(const Json& j, const std::string& field) {
    if (!j.is_object()) {
        config_error(field, "expected an object with keys A, B, Q, R, Sigma_W");
    }
    const auto get = [&](const char* key) {
        if (!j.contains(key)) {
            config_error(field + "." + key, "missing");
        }
        return matrix_from_json(j.at(key), field + "." + key);
    };
    SystemInstance sys{get("A"), get("B"), get("Q"), get("R"), get("Sigma_W")};
    try {
        sys.validate();
    } catch (const Error& e) {
        config_error(field, e.what());
    }
    return sys;
}

Json basis_to_json(const PerturbationBasis& basis) {
    Json list = Json::array();
    for (const auto& d : basis.directions()) {
        Json entry;
        entry["Delta_A"] = matrix_to_json(d.Delta_A);
        entry["Delta_B"] = matrix_to_json(d.Delta_B);
        list.push_back(std::move(entry));
    }
    return list;
}

PerturbationBasis basis_from_json(const Json& j, int state_dim, int input_dim, const std::string& field) {
    if (!j.is_array()) {
        config_error(field, "expected a list of {\"Delta_A\", \"Delta_B\"} objects");
    }
    std::vector<PerturbationDirection> dirs;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string name = field + "[" + std::to_string(i) + "]";
        const Json& entry = j[i];
        if (!entry.is_object() || !entry.contains("Delta_A") || !entry.contains("Delta_B")) {
            config_error(name, "expected keys Delta_A and Delta_B");
        }
        dirs.push_back({matrix_from_json(entry.at("Delta_A"), name + ".Delta_A"),
                        matrix_from_json(entry.at("Delta_B"), name + ".Delta_B")});
    }
    try {
        return PerturbationBasis(std::move(dirs), state_dim, input_dim);
    } catch (const Error& e) {
        config_error(field, e.what());
    }
}

Json report_to_json(const BoundReport& report) {
    Json j;
    j["form"] = to_string(report.form);
    j["bound_value"] = report.bound_value ? finite_or_null(*report.bound_value) : Json(nullptr);
    j["formula_value"] = finite_or_null(report.formula_value);
    j["G"] = finite_or_null(report.G);
    j["L"] = finite_or_null(report.L);
    j["gamma_choice"] = to_string(report.gamma_choice);
    j["N"] = report.N;
    j["T"] = report.T;
    j["basis_size"] = report.basis_size;
    j["burn_in_ok"] = report.burn_in_ok();
    Json burn_in = Json::object();
    for (const auto& c : report.burn_in) {
        burn_in[c.name] = {{"relation", c.relation},
                           {"required", finite_or_null(c.required)},
                           {"actual", finite_or_null(c.actual)},
                           {"passed", c.passed}};
    }
    j["burn_in"] = std::move(burn_in);
    Json constants = Json::object();
    for (const auto& [k, v] : report.constants) {
        constants[k] = finite_or_null(v);
    }
    j["constants"] = std::move(constants);
    Json extras = Json::object();
    for (const auto& [k, v] : report.extras) {
        extras[k] = finite_or_null(v);
    }
    j["extras"] = std::move(extras);
    if (report.relaxation_holds) {
        j["relaxation_holds"] = *report.relaxation_holds;
    }
    j["flags"] = report.flags;
    j["ball_samples"] = report.ball_samples;
    j["seed"] = report.seed ? Json(*report.seed) : Json(nullptr);
    return j;
}

Json stats_to_json(const MonteCarloStats& stats) {
    Json j;
    j["mean"] = finite_or_null(stats.mean);
    j["stderr"] = finite_or_null(stats.stderr_mean);
    j["n_trials"] = stats.n_trials;
    j["n_failed"] = stats.n_failed;
    j["N"] = stats.N;
    j["T"] = stats.T;
    j["seed"] = stats.seed;
    j["N_times_mean"] = finite_or_null(stats.N_times_mean);
    return j;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace lqr_limits
