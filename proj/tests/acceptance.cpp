// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "lqr_limits/cli.hpp"
#include "lqr_limits/instances.hpp"

using namespace lqr_limits;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(4) << x;
    return os.str();
}

double rel_err(const Matrix& got, const Matrix& want) {
    return (got - want).norm() / std::max(1e-300, want.norm());
}

Matrix gaussian(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = normal(rng);
    return M;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

int hardware_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome solver_exactness() {
    std::mt19937_64 rng(1001);
    double worst_dare = 0.0;
    double worst_lyap = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int n = 1 + i % 8;
        const int m = 1 + i % 3;
        const SystemInstance sys = random_instance(rng, n, m);
        const LqrSolution sol = lqr_synthesize(sys);
        const double scale = 1.0 + spectral_norm(sol.P);
        worst_dare = std::max(worst_dare, dare_residual(sys.A, sys.B, sys.Q, sys.R, sol.P) / scale);
        const Matrix S = solve_dlyap(sol.A_cl, sys.Q);
        worst_lyap = std::max(worst_lyap, dlyap_residual(sol.A_cl, sys.Q, S) / (1.0 + spectral_norm(S)));
    }
    // Positive root of P² − 0.81P − 1 = 0.
    const double root = (0.81 + std::sqrt(0.81 * 0.81 + 4.0)) / 2.0;
    const double scalar_gap = std::abs(lqr_synthesize(scalar_instance(0.9, 1.0)).P(0, 0) - root);
    return {worst_dare <= 1e-9 && worst_lyap <= 1e-9 && scalar_gap <= 1e-8,
            "max DARE residual " + fmt(worst_dare) + ", max dlyap residual " + fmt(worst_lyap) +
                ", scalar |P - root| " + fmt(scalar_gap)};
}

Outcome derivative_correctness() {
    std::mt19937_64 rng(1002);
    double worst_fd = 0.0;
    double worst_eq = 0.0;
    for (int i = 0; i < 50; ++i) {
        const SystemInstance sys = random_instance(rng, 1 + i % 6, 1 + i % 3);
        const LqrSolution sol = lqr_synthesize(sys);
        for (int k = 0; k < 5; ++k) {
            const Vector v = gaussian(rng, sys.param_dim(), 1);
            const auto dir = PerturbationDirection::from_vec(v / v.norm(), sys.state_dim(), sys.input_dim());
            const Matrix exact = directional_gain_derivative(sol, sys, dir);
            const Matrix fd = finite_difference_gain_derivative(sys, dir, default_fd_step(sys));
            worst_fd = std::max(worst_fd, rel_err(fd, exact));
        }
        const PerturbationBasis basis = polderman_basis(sol);
        for (const auto& d : basis.directions()) {
            const Matrix closed = -sol.Psi.llt().solve(d.Delta_B.transpose() * sol.P * sol.A_cl);
            const Matrix general = directional_gain_derivative(sol, sys, d);
            worst_eq = std::max(worst_eq, (general - closed).norm() / (1.0 + closed.norm()));
        }
    }
    return {worst_fd <= 1e-4 && worst_eq <= 1e-10,
            "max FD relative error " + fmt(worst_fd) + ", max Polderman closed-form gap " + fmt(worst_eq)};
}

Outcome fisher_constant() {
    double worst = 0.0;
    for (double sigma : {1.0, 0.5, 2.0, 1e-3, 7.25}) {
        for (double a : {0.0, 0.5, 0.9, -0.8}) {
            const SystemInstance sys = scalar_instance(a, 1.0);
            const auto setup = ExplorationSetup::zero_feedback(sys, sigma, 1, 1);
            const double L = fisher_direction_bound(sys, setup, single_direction_basis(input_direction(sys)));
            worst = std::max(worst, std::abs(L - 8.0 * sigma) / (8.0 * sigma));
        }
    }
    return {worst <= 4.0 * std::numeric_limits<double>::epsilon(), "max |L - 8 sigma^2| / 8 sigma^2 = " + fmt(worst)};
}

Outcome exponential_scaling() {
    bool ok = true;
    std::vector<double> dims, log_exact;
    std::string detail;
    for (int d = 3; d <= 8; ++d) {
        const auto setup = ExplorationSetup::zero_feedback(exponential_instance(d, 0.5), 1.0, 1, 1);
        const BoundReport r = exponential_bound(d, 0.5, setup);
        const double P_last = r.extras.at("P_last");
        const double exact = r.extras.at("exact_bound");
        const double closed = 0.25 * std::pow(4.0, d - 2) / 256.0;
        ok = ok && P_last >= std::pow(4.0, d - 2) && exact >= closed;
        dims.push_back(d);
        log_exact.push_back(std::log(exact) / std::log(4.0));
        if (d == 8) detail = "d_x=8: P_last " + fmt(P_last) + ", exact " + fmt(exact) + ", closed " + fmt(closed);
    }
    const double s = slope(dims, log_exact);
    return {ok && s >= 0.9, detail + ", log4 slope " + fmt(s)};
}

std::vector<std::vector<double>> parse_numeric_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::stringstream lines(text);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

Outcome figure1() {
    const ExperimentConfig c = parse_config(R"({"schema_version": 1, "setup": {"T": 1}})");
    const CommandOutput out = cmd_figure1(c);
    const auto rows = parse_numeric_csv(out.artifact);
    bool monotone = rows.size() == 50;
    for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i][1] < rows[i - 1][1];
    const double ratio = rows.front()[1] / rows.back()[1];

    std::ifstream fixture_file(std::string(LQR_TEST_DATA_DIR) + "/figure1_T1.csv");
    std::stringstream buf;
    buf << fixture_file.rdbuf();
    const auto fixture = parse_numeric_csv(buf.str());
    double worst = fixture.size() == rows.size() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(rows.size(), fixture.size()); ++i) {
        worst = std::max(worst, std::abs(rows[i][1] - fixture[i][1]) / fixture[i][1]);
    }
    return {monotone && ratio > 10.0 && worst <= 1e-9 && out.exit_code == kExitSuccess,
            std::string(monotone ? "strictly increasing as gamma -> 0" : "NOT monotone") + ", bound(1e-3)/bound(1e-2) = " +
                fmt(ratio) + ", max fixture deviation " + fmt(worst)};
}

Outcome relaxation_chains() {
    std::mt19937_64 rng(1006);
    int violations = 0;
    int checked_dim = 0;
    int checked_st = 0;
    double tightest = 0.0;
    for (int i = 0; i < 30; ++i) {
        const int n = 1 + i % 5;
        const int m = 1 + i % 2;
        RandomInstanceOptions opts;
        opts.identity_costs = i % 2 == 0;
        opts.radius_max = 0.95;
        const SystemInstance sys = random_instance(rng, n, m, opts);
        const auto setup = ExplorationSetup::zero_feedback(sys, 1.0, 1, 1000);
        const BoundReport dim = dimensional_bound(sys, setup);
        ++checked_dim;
        violations += dim.relaxation_holds.value_or(false) ? 0 : 1;
        tightest = std::max(tightest, dim.extras.at("closed_form") / dim.extras.at("exact_bound"));
        try {
            const BoundReport st = system_theoretic_bound(sys, setup);
            ++checked_st;
            violations += st.relaxation_holds.value_or(false) ? 0 : 1;
            tightest = std::max(tightest, st.extras.at("closed_form") / st.extras.at("exact_bound"));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Precondition) throw;
        }
    }
    return {violations == 0 && checked_st >= 15,
            std::to_string(violations) + " violations over " + std::to_string(checked_dim) + " dimensional + " +
                std::to_string(checked_st) + " self-direction checks, max closed/exact " + fmt(tightest)};
}

Outcome empirical_fisher() {
    std::mt19937_64 rng(1007);
    RandomInstanceOptions stable;
    stable.radius_max = 0.95;
    struct Combo {
        SystemInstance sys;
        ExplorationSetup setup;
        PerturbationBasis basis;
    };
    std::vector<Combo> combos;
    {
        const SystemInstance s = scalar_instance(0.9, 1.0);
        combos.push_back({s, ExplorationSetup::zero_feedback(s, 1.0, 100, 100), single_direction_basis(input_direction(s))});
    }
    {
        const SystemInstance s = random_instance(rng, 3, 1, stable);
        combos.push_back({s, ExplorationSetup::zero_feedback(s, 1.0, 100, 100), polderman_basis(lqr_synthesize(s))});
    }
    {
        const SystemInstance s = random_instance(rng, 2, 2, stable);
        combos.push_back({s, ExplorationSetup::zero_feedback(s, 0.5, 10, 1000), PerturbationBasis::canonical(2, 2)});
    }
    {
        const SystemInstance s = exponential_instance(4, 0.5);
        combos.push_back({s, ExplorationSetup::zero_feedback(s, 1.0, 1000, 10), single_direction_basis(self_direction(s))});
    }
    {
        const SystemInstance s = scalar_instance(1.2, 1.0);
        combos.push_back({s, ExplorationSetup{Matrix::Constant(1, 1, -0.7), 1.0, 100, 100},
                          PerturbationBasis::canonical(1, 1)});
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        const FisherCheck c = empirical_fisher_check(combos[i].sys, combos[i].setup, combos[i].basis, 1000,
                                                     2000 + i, hardware_threads());
        worst = std::max(worst, c.ratio);
    }
    return {worst <= 1.05, "max ratio over 5 combinations (NT = 1e4, 1000 trials) = " + fmt(worst)};
}

const char* kCompareConfig = R"({
  "schema_version": 1,
  "system": {"generator": "scalar", "a": 0.9, "b": 1.0, "q": 1.0, "r": 1.0, "sigma_w_sq": 1.0},
  "setup": {"sigma_u_sq": 1.0, "T": 50},
  "trials": 400,
  "seed": 2024,
  "compare": {"N_values": [100, 1000]}
})";

Outcome learner_consistency() {
    ExperimentConfig c = parse_config(kCompareConfig);
    c.threads = hardware_threads();
    const CommandOutput out = cmd_compare(c);
    const Json summary = Json::parse(out.summary);
    bool consistent = true;
    std::string detail;
    for (const auto& row : summary.at("rows")) {
        const Json& s = row.at("stats");
        const double n_mean = s.at("N_times_mean").get<double>();
        const double n_stderr = static_cast<double>(s.at("N").get<long>()) * s.at("stderr").get<double>();
        const double bound = summary.at("bound").at("formula_value").get<double>();
        consistent = consistent && n_mean >= bound - 3.0 * n_stderr;
        detail += "N=" + std::to_string(s.at("N").get<long>()) + ": N*mean " + fmt(n_mean) + " vs bound " +
                  fmt(bound) + "; ";
    }
    const double rate = summary.at("rate_slope").get<double>();
    return {consistent && rate >= -1.3 && rate <= -0.7 && out.exit_code == kExitSuccess,
            detail + "rate slope " + fmt(rate)};
}

Outcome determinism() {
    const ExperimentConfig fig = parse_config(R"({"schema_version": 1, "setup": {"T": 10}})");
    const std::string f1 = cmd_figure1(fig).artifact;
    const std::string f2 = cmd_figure1(fig).artifact;

    ExperimentConfig cmp = parse_config(kCompareConfig);
    cmp.trials = 100;
    cmp.threads = 1;
    const CommandOutput a = cmd_compare(cmp);
    const CommandOutput b = cmd_compare(cmp);
    cmp.threads = 4;
    const CommandOutput c = cmd_compare(cmp);
    const bool same_fig = f1 == f2;
    const bool same_cmp = a.artifact == b.artifact && a.summary == b.summary && a.artifact == c.artifact &&
                          a.summary == c.summary;
    return {same_fig && same_cmp, std::string("figure1 ") + (same_fig ? "identical" : "DIFFERS") +
                                      ", compare (threads 1, 1, 4) " + (same_cmp ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"solver exactness", solver_exactness},
        {"derivative correctness", derivative_correctness},
        {"input-direction Fisher constant", fisher_constant},
        {"exponential scaling", exponential_scaling},
        {"scalar curve blow-up", figure1},
        {"relaxation chains", relaxation_chains},
        {"empirical Fisher bound", empirical_fisher},
        {"bound versus learner", learner_consistency},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += o.passed ? 0 : 1;
        std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << o.detail << " [" << std::fixed << std::setprecision(2) << secs << " s]"
                  << std::defaultfloat << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
