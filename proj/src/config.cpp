#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lqr_limits/cli.hpp"

namespace lqr_limits {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw Error(ErrorKind::Config, "field '" + field + "': " + what);
}

void reject_unknown(const Json& obj, const std::string& field, const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            fail(field.empty() ? item.key() : field + "." + item.key(), "unknown key");
        }
    }
}

const Json& require_object(const Json& j, const std::string& field) {
    if (!j.is_object()) {
        fail(field, "expected an object");
    }
    return j;
}

double get_double(const Json& obj, const char* key, const std::string& field, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const Json& v = obj.at(key);
    if (!v.is_number()) {
        fail(field + "." + key, "expected a number");
    }
    return v.get<double>();
}

double require_double(const Json& obj, const char* key, const std::string& field) {
    if (!obj.contains(key)) {
        fail(field + "." + key, "missing");
    }
    return get_double(obj, key, field, 0.0);
}

long get_integer(const Json& obj, const char* key, const std::string& field, long fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const Json& v = obj.at(key);
    if (!v.is_number_integer()) {
        fail(field + "." + key, "expected an integer");
    }
    return v.get<long>();
}

std::string get_string(const Json& obj, const char* key, const std::string& field, std::string fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const Json& v = obj.at(key);
    if (!v.is_string()) {
        fail(field + "." + key, "expected a string");
    }
    return v.get<std::string>();
}

SystemSpec parse_system(const Json& j) {
    require_object(j, "system");
    SystemSpec spec;
    if (!j.contains("generator")) {
        spec.generator = "matrices";
        reject_unknown(j, "system", {"A", "B", "Q", "R", "Sigma_W"});
        spec.instance = system_from_json(j, "system");
        return spec;
    }
    spec.generator = get_string(j, "generator", "system", "");
    if (spec.generator == "scalar") {
        reject_unknown(j, "system", {"generator", "a", "b", "q", "r", "sigma_w_sq", "gamma"});
        double a = 0.0;
        double b = 0.0;
        if (j.contains("gamma")) {
            if (j.contains("a") || j.contains("b")) {
                fail("system.gamma", "give either gamma or a/b, not both");
            }
            const double gamma = require_double(j, "gamma", "system");
            if (!(gamma > 0.0 && gamma < 1.0)) {
                fail("system.gamma", "must lie in (0, 1)");
            }
            a = 1.0 - gamma;
            b = gamma;
        } else {
            a = require_double(j, "a", "system");
            b = require_double(j, "b", "system");
        }
        try {
            spec.instance = scalar_instance(a, b, get_double(j, "q", "system", 1.0), get_double(j, "r", "system", 1.0),
                                            get_double(j, "sigma_w_sq", "system", 1.0));
        } catch (const Error& e) {
            fail("system", e.what());
        }
    } else if (spec.generator == "exponential") {
        reject_unknown(j, "system", {"generator", "d_x", "rho"});
        spec.exponential_dim = static_cast<int>(get_integer(j, "d_x", "system", 3));
        spec.exponential_rho = require_double(j, "rho", "system");
        if (spec.exponential_dim < 2) {
            fail("system.d_x", "must be >= 2");
        }
        if (!(spec.exponential_rho > 0.0 && spec.exponential_rho < 1.0)) {
            fail("system.rho", "must lie in (0, 1)");
        }
        spec.instance = exponential_instance(spec.exponential_dim, spec.exponential_rho);
    } else {
        fail("system.generator", "expected \"scalar\" or \"exponential\", got \"" + spec.generator + "\"");
    }
    return spec;
}

Json parse_json_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte > 0 ? byte - 1 : 0), '\n');
        std::ostringstream os;
        os << "invalid JSON at line " << line << ": " << e.what();
        throw Error(ErrorKind::Config, os.str());
    }
}

}  // namespace

const SystemSpec& ExperimentConfig::require_system() const {
    if (!system) {
        fail("system", "missing (required by this command)");
    }
    return *system;
}

ExplorationSetup ExperimentConfig::setup_for(const SystemInstance& sys) const {
    ExplorationSetup setup;
    setup.F = F ? *F : Matrix::Zero(sys.input_dim(), sys.state_dim());
    setup.sigma_u_sq = sigma_u_sq;
    setup.N = N;
    setup.T = T;
    try {
        setup.validate(sys);
    } catch (const Error& e) {
        fail("setup", e.what());
    }
    return setup;
}

PerturbationBasis ExperimentConfig::basis_for(const SystemInstance& sys) const {
    if (basis == "input") return single_direction_basis(input_direction(sys));
    if (basis == "self") return single_direction_basis(self_direction(sys));
    if (basis == "canonical") return PerturbationBasis::canonical(sys.state_dim(), sys.input_dim());
    if (basis == "polderman") return polderman_basis(lqr_synthesize(sys));
    return basis_from_json(custom_basis, sys.state_dim(), sys.input_dim(), "basis");
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    const Json root = parse_json_text(text);
    require_object(root, "<root>");
    reject_unknown(root, "", {"schema_version", "system", "setup", "basis", "gamma_choice", "bound", "seed", "trials",
                              "threads", "budget_convention", "figure1", "scan", "compare"});
    if (!root.contains("schema_version")) {
        fail("schema_version", "missing");
    }
    if (get_integer(root, "schema_version", "", 0) != kConfigSchemaVersion) {
        fail("schema_version", "unsupported version (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }

    ExperimentConfig config;
    if (root.contains("system")) {
        config.system = parse_system(root.at("system"));
    }

    if (root.contains("setup")) {
        const Json& s = require_object(root.at("setup"), "setup");
        reject_unknown(s, "setup", {"F", "sigma_u_sq", "N", "T"});
        if (s.contains("F")) {
            config.F = matrix_from_json(s.at("F"), "setup.F");
        }
        config.sigma_u_sq = get_double(s, "sigma_u_sq", "setup", 1.0);
        config.N = get_integer(s, "N", "setup", 1);
        config.T = get_integer(s, "T", "setup", 10);
        if (config.sigma_u_sq < 0.0) fail("setup.sigma_u_sq", "must be >= 0");
        if (config.N < 1) fail("setup.N", "must be >= 1");
        if (config.T < 1) fail("setup.T", "must be >= 1");
    }

    if (root.contains("basis")) {
        const Json& b = root.at("basis");
        if (b.is_string()) {
            config.basis = b.get<std::string>();
            static const std::set<std::string> kinds{"input", "polderman", "self", "canonical"};
            if (!kinds.count(config.basis)) {
                fail("basis", "expected input, polderman, self, canonical, a direction list or {\"file\": path}");
            }
        } else if (b.is_array()) {
            config.basis = "custom";
            config.custom_basis = b;
        } else if (b.is_object()) {
            reject_unknown(b, "basis", {"file"});
            const std::filesystem::path file = get_string(b, "file", "basis", "");
            const std::filesystem::path path = file.is_absolute() ? file : std::filesystem::path(base_dir) / file;
            std::ifstream in(path);
            if (!in) {
                fail("basis.file", "cannot open " + path.string());
            }
            std::stringstream buf;
            buf << in.rdbuf();
            config.basis = "custom";
            config.custom_basis = parse_json_text(buf.str());
        } else {
            fail("basis", "expected a string, list or object");
        }
    }

    if (root.contains("gamma_choice")) {
        try {
            config.gamma_choice = parse_gamma_choice(get_string(root, "gamma_choice", "", ""));
        } catch (const Error& e) {
            fail("gamma_choice", e.what());
        }
    }

    if (root.contains("bound")) {
        const Json& b = require_object(root.at("bound"), "bound");
        reject_unknown(b, "bound", {"form", "epsilon", "J_lambda_norm", "prior_constant", "ball_samples"});
        config.bound.form = get_string(b, "form", "bound", "asymptotic");
        static const std::set<std::string> forms{"asymptotic", "finite_sample", "dimensional", "exponential",
                                                 "system_theoretic"};
        if (!forms.count(config.bound.form)) {
            fail("bound.form", "unknown form \"" + config.bound.form + "\"");
        }
        config.bound.epsilon = get_double(b, "epsilon", "bound", 0.0);
        if (b.contains("J_lambda_norm")) config.bound.J_lambda_norm = get_double(b, "J_lambda_norm", "bound", 0.0);
        if (b.contains("prior_constant")) config.bound.prior_constant = get_double(b, "prior_constant", "bound", 0.0);
        config.bound.ball_samples = static_cast<int>(get_integer(b, "ball_samples", "bound", 64));
        if (config.bound.epsilon < 0.0) fail("bound.epsilon", "must be >= 0");
        if (config.bound.ball_samples < 0) fail("bound.ball_samples", "must be >= 0");
    } else if (config.system && config.system->generator == "exponential") {
        config.bound.form = "exponential";
    }

    if (root.contains("seed")) {
        const Json& s = root.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            fail("seed", "expected a non-negative integer");
        }
        config.seed = s.get<std::uint64_t>();
    }
    config.trials = static_cast<int>(get_integer(root, "trials", "", 100));
    config.threads = static_cast<int>(get_integer(root, "threads", "", 1));
    if (config.trials < 1) fail("trials", "must be >= 1");
    if (config.threads < 0) fail("threads", "must be >= 0");
    if (root.contains("budget_convention")) {
        try {
            config.budget_convention = parse_budget_convention(get_string(root, "budget_convention", "", ""));
        } catch (const Error& e) {
            fail("budget_convention", e.what());
        }
    }

    if (root.contains("figure1")) {
        const Json& f = require_object(root.at("figure1"), "figure1");
        reject_unknown(f, "figure1", {"gamma_min", "gamma_max", "n_points"});
        config.figure1.gamma_min = get_double(f, "gamma_min", "figure1", 1e-3);
        config.figure1.gamma_max = get_double(f, "gamma_max", "figure1", 1e-2);
        config.figure1.n_points = static_cast<int>(get_integer(f, "n_points", "figure1", 50));
    }

    if (root.contains("scan")) {
        const Json& s = require_object(root.at("scan"), "scan");
        reject_unknown(s, "scan", {"kind", "d_x_min", "d_x_max", "rho", "pairs", "instances_per_pair", "a"});
        config.scan.kind = get_string(s, "kind", "scan", "exponential");
        if (config.scan.kind != "exponential" && config.scan.kind != "dimension") {
            fail("scan.kind", "expected \"exponential\" or \"dimension\"");
        }
        config.scan.d_x_min = static_cast<int>(get_integer(s, "d_x_min", "scan", 3));
        config.scan.d_x_max = static_cast<int>(get_integer(s, "d_x_max", "scan", 8));
        config.scan.rho = get_double(s, "rho", "scan", 0.5);
        config.scan.instances_per_pair = static_cast<int>(get_integer(s, "instances_per_pair", "scan", 5));
        config.scan.a = get_double(s, "a", "scan", 0.5);
        if (s.contains("pairs")) {
            const Json& p = s.at("pairs");
            if (!p.is_array() || p.empty()) fail("scan.pairs", "expected a non-empty list of [d_x, d_u]");
            config.scan.pairs.clear();
            for (std::size_t i = 0; i < p.size(); ++i) {
                const Json& e = p[i];
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
                    fail("scan.pairs[" + std::to_string(i) + "]", "expected [d_x, d_u]");
                }
                config.scan.pairs.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
        if (config.scan.d_x_min < 2 || config.scan.d_x_max < config.scan.d_x_min) {
            fail("scan", "need 2 <= d_x_min <= d_x_max");
        }
        if (config.scan.instances_per_pair < 1) fail("scan.instances_per_pair", "must be >= 1");
    }

    if (root.contains("compare")) {
        const Json& c = require_object(root.at("compare"), "compare");
        reject_unknown(c, "compare", {"N_values", "diagnostic_exact_model"});
        if (c.contains("N_values")) {
            const Json& v = c.at("N_values");
            if (!v.is_array() || v.empty()) fail("compare.N_values", "expected a non-empty list of integers");
            config.compare.N_values.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number_integer() || v[i].get<long>() < 1) {
                    fail("compare.N_values[" + std::to_string(i) + "]", "expected a positive integer");
                }
                config.compare.N_values.push_back(v[i].get<long>());
            }
        }
        if (c.contains("diagnostic_exact_model")) {
            if (!c.at("diagnostic_exact_model").is_boolean()) fail("compare.diagnostic_exact_model", "expected a boolean");
            config.compare.diagnostic_exact_model = c.at("diagnostic_exact_model").get<bool>();
        }
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Config, "cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    return parse_config(buf.str(), parent.empty() ? "." : parent.string());
}

}  // namespace lqr_limits
