#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "lqr_limits/cli.hpp"
#include "lqr_limits/instances.hpp"

namespace lqr_limits {

namespace {

class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header) { row_strings(header); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (const double v : values) {
            cells.push_back(format_double(v));
        }
        row_strings(cells);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::nan("");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

bool report_flagged(const BoundReport& r) {
    return !r.burn_in_ok() || (r.relaxation_holds && !*r.relaxation_holds);
}

}  // namespace

CommandOutput cmd_bound(const ExperimentConfig& config) {
    const SystemSpec& spec = config.require_system();
    const SystemInstance& sys = spec.instance;
    const ExplorationSetup setup = config.setup_for(sys);
    const std::string& form = config.bound.form;

    BoundReport report;
    if (form == "asymptotic") {
        report = asymptotic_lower_bound(sys, setup, config.basis_for(sys), config.gamma_choice);
    } else if (form == "finite_sample") {
        FiniteSampleOptions options;
        options.epsilon = config.bound.epsilon;
        options.gamma_choice = config.gamma_choice;
        options.ball_samples = config.bound.ball_samples;
        options.seed = config.seed;
        if (config.bound.J_lambda_norm) {
            options.J_lambda_norm = *config.bound.J_lambda_norm;
        } else if (config.bound.prior_constant) {
            options.J_lambda_norm = prior_fisher_norm(*config.bound.prior_constant, config.bound.epsilon);
        } else {
            throw Error(ErrorKind::Config, "field 'bound': finite_sample needs J_lambda_norm or prior_constant");
        }
        report = finite_sample_bound(sys, setup, config.basis_for(sys), options);
    } else if (form == "dimensional") {
        report = dimensional_bound(sys, setup);
    } else if (form == "system_theoretic") {
        report = system_theoretic_bound(sys, setup);
    } else if (form == "exponential") {
        if (spec.generator != "exponential") {
            throw Error(ErrorKind::Config, "field 'bound.form': exponential needs system.generator = exponential");
        }
        report = exponential_bound(spec.exponential_dim, spec.exponential_rho, setup);
    }

    CommandOutput out;
    Json j = report_to_json(report);
    j["system"] = system_to_json(sys);
    out.artifact = dump(j);
    if (report_flagged(report)) {
        out.exit_code = kExitFlagged;
        out.notes.push_back("report flagged: " + Json(report.flags).dump());
    }
    return out;
}

CommandOutput cmd_figure1(const ExperimentConfig& config) {
    const Figure1Spec& f = config.figure1;
    if (!(f.gamma_min > 0.0 && f.gamma_min < f.gamma_max && f.gamma_max < 1.0)) {
        throw Error(ErrorKind::Config, "field 'figure1': need 0 < gamma_min < gamma_max < 1");
    }
    if (f.n_points < 1) {
        throw Error(ErrorKind::Config, "field 'figure1.n_points': must be >= 1");
    }
    std::vector<double> gammas;
    gammas.reserve(static_cast<std::size_t>(f.n_points));
    for (int i = 0; i < f.n_points; ++i) {
        const double fraction = f.n_points == 1 ? 0.0 : static_cast<double>(i) / (f.n_points - 1);
        gammas.push_back(i == f.n_points - 1 && i > 0 ? f.gamma_max
                                                      : f.gamma_min * std::pow(f.gamma_max / f.gamma_min, fraction));
    }
    const ExplorationSetup setup{Matrix::Zero(1, 1), config.sigma_u_sq, config.N, config.T};
    const auto curve = scalar_bound_curve(gammas, setup);

    CommandOutput out;
    CsvWriter csv({"gamma", "bound_value", "P", "K", "dK_db"});
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& p = curve[i];
        csv.row({p.gamma, p.bound_value, p.P, p.K, p.dK_db});
        if (i > 0 && !(p.bound_value < curve[i - 1].bound_value)) {
            out.exit_code = kExitFlagged;
            out.notes.push_back("bound not strictly decreasing in gamma at gamma = " + format_double(p.gamma));
        }
    }
    out.artifact = csv.str();
    return out;
}

CommandOutput cmd_scan(const ExperimentConfig& config) {
    const ScanSpec& s = config.scan;
    CommandOutput out;
    Json summary;
    summary["kind"] = s.kind;
    if (s.kind == "exponential") {
        if (s.d_x_min < 3) {
            throw Error(ErrorKind::Config, "field 'scan.d_x_min': the exponential bound needs d_x >= 3");
        }
        CsvWriter csv({"d_x", "log4_closed_form", "log4_exact_bound", "closed_form", "exact_bound", "P_last"});
        std::vector<double> dims, log_closed, log_exact;
        bool all_hold = true;
        for (int d = s.d_x_min; d <= s.d_x_max; ++d) {
            const ExplorationSetup setup{Matrix::Zero(1, d), config.sigma_u_sq, config.N, config.T};
            const BoundReport r = exponential_bound(d, s.rho, setup);
            const double closed = r.extras.at("closed_form");
            const double exact = r.extras.at("exact_bound");
            dims.push_back(d);
            log_closed.push_back(std::log(closed) / std::log(4.0));
            log_exact.push_back(std::log(exact) / std::log(4.0));
            csv.row({static_cast<double>(d), log_closed.back(), log_exact.back(), closed, exact,
                     r.extras.at("P_last")});
            all_hold = all_hold && r.relaxation_holds.value_or(false);
        }
        summary["rho"] = s.rho;
        summary["slope_log4_closed_form"] = dims.size() > 1 ? Json(fitted_slope(dims, log_closed)) : Json(nullptr);
        summary["slope_log4_exact_bound"] = dims.size() > 1 ? Json(fitted_slope(dims, log_exact)) : Json(nullptr);
        summary["all_relaxations_hold"] = all_hold;
        if (!all_hold) {
            out.exit_code = kExitFlagged;
            out.notes.push_back("closed form exceeded the exact bound for some d_x");
        }
        out.artifact = csv.str();
    } else {
        std::mt19937_64 rng(config.seed);
        CsvWriter csv({"d_x", "d_u", "d_x_d_u", "instance", "dimensional_bound", "exact_polderman_bound", "burn_in_ok"});
        Json pairs = Json::array();
        double reference = 0.0;
        bool all_hold = true;
        for (const auto& [dx, du] : s.pairs) {
            double total = 0.0;
            for (int k = 0; k < s.instances_per_pair; ++k) {
                const SystemInstance sys = fixed_spectrum_instance(rng, dx, du, s.a);
                const ExplorationSetup setup{Matrix::Zero(du, dx), config.sigma_u_sq, config.N, config.T};
                const BoundReport r = dimensional_bound(sys, setup);
                total += r.formula_value;
                all_hold = all_hold && r.relaxation_holds.value_or(false);
                csv.row_strings({std::to_string(dx), std::to_string(du), std::to_string(dx * du), std::to_string(k),
                                 format_double(r.formula_value), format_double(r.extras.at("exact_bound")),
                                 r.burn_in_ok() ? "1" : "0"});
            }
            const double mean = total / s.instances_per_pair;
            if (pairs.empty()) {
                reference = mean;
            }
            const auto& first = s.pairs.front();
            pairs.push_back({{"d_x", dx},
                             {"d_u", du},
                             {"mean_dimensional_bound", mean},
                             {"ratio_to_first", reference > 0.0 ? Json(mean / reference) : Json(nullptr)},
                             {"dimension_ratio_to_first",
                              static_cast<double>(dx * du) / static_cast<double>(first.first * first.second)}});
        }
        summary["a"] = s.a;
        summary["pairs"] = std::move(pairs);
        summary["all_relaxations_hold"] = all_hold;
        if (!all_hold) {
            out.exit_code = kExitFlagged;
            out.notes.push_back("dimensional bound exceeded the exact bound for some instance");
        }
        out.artifact = csv.str();
    }
    out.summary = dump(summary);
    return out;
}

CommandOutput cmd_compare(const ExperimentConfig& config) {
    const SystemInstance& sys = config.require_system().instance;
    if (config.trials < 30) {
        throw Error(ErrorKind::Config, "field 'trials': compare needs at least 30 trials");
    }
    const ExplorationSetup base = config.setup_for(sys);
    const BoundReport bound = asymptotic_lower_bound(sys, base, config.basis_for(sys), config.gamma_choice);
    const double bound_value = bound.formula_value;

    CommandOutput out;
    CsvWriter csv({"N", "n_mean", "stderr", "bound", "ratio"});
    Json rows = Json::array();
    std::vector<double> log_N, log_mean;
    for (const long N : config.compare.N_values) {
        ExplorationSetup setup = base;
        setup.N = N;
        MonteCarloOptions mc;
        mc.trials = config.trials;
        mc.seed = trial_seed(config.seed, static_cast<std::uint64_t>(N));
        mc.threads = config.threads;
        mc.pipeline.convention = config.budget_convention;
        mc.pipeline.diagnostic_exact_model = config.compare.diagnostic_exact_model;
        const MonteCarloStats stats = monte_carlo_excess_cost(sys, setup, mc);

        const double ratio = bound_value > 0.0 ? stats.N_times_mean / bound_value : std::nan("");
        const bool consistent = bound_value > 0.0 && ratio >= 1.0 - 3.0 * stats.N_times_stderr / bound_value;
        csv.row({static_cast<double>(N), stats.N_times_mean, stats.N_times_stderr, bound_value, ratio});
        rows.push_back({{"stats", stats_to_json(stats)}, {"ratio", ratio}, {"consistent", consistent}});
        if (!consistent && !config.compare.diagnostic_exact_model) {
            out.exit_code = kExitFlagged;
            out.notes.push_back("N = " + std::to_string(N) + ": empirical N*mean falls below the bound");
        }
        if (stats.mean > 0.0) {
            log_N.push_back(std::log(static_cast<double>(N)));
            log_mean.push_back(std::log(stats.mean));
        }
    }
    Json summary;
    summary["bound"] = report_to_json(bound);
    summary["rows"] = std::move(rows);
    summary["rate_slope"] = log_N.size() > 1 ? Json(fitted_slope(log_N, log_mean)) : Json(nullptr);
    summary["diagnostic_exact_model"] = config.compare.diagnostic_exact_model;
    if (config.compare.diagnostic_exact_model) {
        out.exit_code = kExitFlagged;
        out.notes.push_back("diagnostic exact-model mode: the learner was given the true system");
    }
    out.artifact = csv.str();
    out.summary = dump(summary);
    return out;
}

CommandOutput cmd_simulate(const ExperimentConfig& config) {
    const SystemInstance& sys = config.require_system().instance;
    MonteCarloOptions mc;
    mc.trials = config.trials;
    mc.seed = config.seed;
    mc.threads = config.threads;
    mc.pipeline.convention = config.budget_convention;
    mc.pipeline.diagnostic_exact_model = config.compare.diagnostic_exact_model;
    const MonteCarloStats stats = monte_carlo_excess_cost(sys, config.setup_for(sys), mc);
    CommandOutput out;
    out.artifact = dump(stats_to_json(stats));
    if (stats.n_failed > 0) {
        out.notes.push_back(std::to_string(stats.n_failed) + " trial(s) failed and were excluded");
    }
    return out;
}

int run_cli(const std::string& command, const std::string& config_path, const std::string& out_path,
            std::optional<std::uint64_t> seed, std::optional<int> threads, std::ostream& out, std::ostream& err) {
    try {
        CommandOutput result;
        if (command == "verify") {
            VerifyOptions options;
            if (!config_path.empty()) {
                options.seed = load_config(config_path).seed;
            }
            if (seed) {
                options.seed = *seed;
            }
            result = cmd_verify(options);
        } else {
            if (config_path.empty()) {
                throw Error(ErrorKind::Config, "--config is required for '" + command + "'");
            }
            ExperimentConfig config = load_config(config_path);
            if (seed) config.seed = *seed;
            if (threads) config.threads = *threads;
            if (command == "bound") {
                result = cmd_bound(config);
            } else if (command == "figure1") {
                result = cmd_figure1(config);
            } else if (command == "scan") {
                result = cmd_scan(config);
            } else if (command == "compare") {
                result = cmd_compare(config);
            } else if (command == "simulate") {
                result = cmd_simulate(config);
            } else {
                throw Error(ErrorKind::Config, "unknown command '" + command + "'");
            }
        }

        if (out_path.empty()) {
            out << result.artifact;
            if (!result.summary.empty()) {
                err << result.summary;
            }
        } else {
            std::ofstream file(out_path, std::ios::binary);
            if (!file) {
                throw Error(ErrorKind::Config, "cannot write " + out_path);
            }
            file << result.artifact;
            if (!result.summary.empty()) {
                std::ofstream side(out_path + ".summary.json", std::ios::binary);
                side << result.summary;
            }
        }
        for (const auto& note : result.notes) {
            err << note << '\n';
        }
        return result.exit_code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

}  // namespace lqr_limits
