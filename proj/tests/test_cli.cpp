#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lqr_limits/cli.hpp"

using namespace lqr_limits;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "lqr_limits_cli_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const fs::path path = scratch_dir() / name;
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

ErrorKind config_error_kind(const std::string& text, std::string* message = nullptr) {
    try {
        (void)parse_config(text);
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    FAIL("expected a config error");
    return ErrorKind::Validation;
}

const char* kScalarCompare = R"({
  "schema_version": 1,
  "system": {"generator": "scalar", "a": 0.9, "b": 1.0},
  "setup": {"T": 50},
  "trials": 40,
  "seed": 9,
  "compare": {"N_values": [10, 100]}
})";

}  // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig c = parse_config(R"({"schema_version": 1,
        "system": {"generator": "scalar", "gamma": 0.01},
        "setup": {"sigma_u_sq": 2.0, "N": 5, "T": 7}, "basis": "polderman",
        "gamma_choice": "stationary_half", "seed": 42})");
    REQUIRE(c.system.has_value());
    CHECK(c.system->instance.A(0, 0) == doctest::Approx(0.99));
    CHECK(c.system->instance.B(0, 0) == doctest::Approx(0.01));
    CHECK(c.sigma_u_sq == 2.0);
    CHECK(c.N == 5);
    CHECK(c.T == 7);
    CHECK(c.basis == "polderman");
    CHECK(c.gamma_choice == GammaChoice::StationaryHalf);
    CHECK(c.seed == 42);

    const ExperimentConfig e = parse_config(R"({"schema_version": 1, "system": {"generator": "exponential", "d_x": 5, "rho": 0.5}})");
    CHECK(e.bound.form == "exponential");
    CHECK(e.system->instance.state_dim() == 5);

    const ExperimentConfig m = parse_config(R"({"schema_version": 1,
        "system": {"A": [[0.5, 0.1], [0.0, 0.3]], "B": [1.0, 0.5], "Q": [[1, 0], [0, 1]], "R": 1.0,
                   "Sigma_W": [[1, 0], [0, 1]]},
        "basis": [{"Delta_A": [[0, 0], [0, 0]], "Delta_B": [1.0, 0.0]}]})");
    CHECK(m.system->instance.B.rows() == 2);
    CHECK(m.system->instance.A(0, 1) == 0.1);
    CHECK(m.basis_for(m.system->instance).size() == 1);
}

TEST_CASE("config errors name the field") {
    std::string msg;
    CHECK(config_error_kind(R"({"system": {"generator": "scalar", "a": 0.5, "b": 1}})", &msg) == ErrorKind::Config);
    CHECK(msg.find("schema_version") != std::string::npos);
    CHECK(config_error_kind(R"({"schema_version": 1, "sytem": {}})", &msg) == ErrorKind::Config);
    CHECK(msg.find("sytem") != std::string::npos);
    CHECK(config_error_kind(R"({"schema_version": 1, "setup": {"T": 0}})", &msg) == ErrorKind::Config);
    CHECK(msg.find("setup.T") != std::string::npos);
    CHECK(config_error_kind(R"({"schema_version": 1, "system": {"generator": "scalar", "a": 0.5}})", &msg) ==
          ErrorKind::Config);
    CHECK(msg.find("system.b") != std::string::npos);
    CHECK(config_error_kind("{\"schema_version\": 1,\n\"seed\": 3\n\"trials\": 4}", &msg) == ErrorKind::Config);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(config_error_kind(R"({"schema_version": 2})") == ErrorKind::Config);
    CHECK(config_error_kind(R"({"schema_version": 1, "basis": "diagonal"})") == ErrorKind::Config);
}

TEST_CASE("basis file resolves relative to the config") {
    write_file("basis_dir_probe.json", R"([{"Delta_A": 0.0, "Delta_B": 1.0}])");
    const ExperimentConfig c =
        parse_config(R"({"schema_version": 1, "system": {"generator": "scalar", "a": 0.5, "b": 1},
                         "basis": {"file": "basis_dir_probe.json"}})",
                     scratch_dir().string());
    const PerturbationBasis basis = c.basis_for(c.system->instance);
    CHECK(basis.V()(1, 0) == 1.0);
    CHECK_THROWS_AS((void)parse_config(R"({"schema_version": 1, "basis": {"file": "missing.json"}})",
                                       scratch_dir().string()),
                    Error);
}

TEST_CASE("figure1 command reproduces the fixture") {
    const ExperimentConfig c = parse_config(R"({"schema_version": 1, "setup": {"T": 1}})");
    const CommandOutput out = cmd_figure1(c);
    CHECK(out.exit_code == kExitSuccess);
    const auto rows = split_csv(out.artifact);
    REQUIRE(rows.size() == 51);
    CHECK(rows[0] == std::vector<std::string>{"gamma", "bound_value", "P", "K", "dK_db"});
    const auto fixture = split_csv(slurp(fs::path(LQR_TEST_DATA_DIR) / "figure1_T1.csv"));
    REQUIRE(fixture.size() == 51);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            CAPTURE(i);
            CAPTURE(j);
            CHECK(std::stod(rows[i][j]) == doctest::Approx(std::stod(fixture[i][j])).epsilon(1e-9));
        }
    }
    CHECK(rows[1][0] == "0.001");
    CHECK(rows[50][0] == "0.01");
    CHECK(out.artifact.find('\r') == std::string::npos);
}

TEST_CASE("bound command exit codes") {
    const ExperimentConfig ok = parse_config(R"({"schema_version": 1,
        "system": {"generator": "scalar", "a": 0.9, "b": 1.0}, "setup": {"T": 50}})");
    const CommandOutput good = cmd_bound(ok);
    CHECK(good.exit_code == kExitSuccess);
    const Json j = Json::parse(good.artifact);
    CHECK(j.at("form") == "asymptotic");
    CHECK(j.at("L").get<double>() == 8.0);
    CHECK(j.at("bound_value").is_number());

    const ExperimentConfig early = parse_config(R"({"schema_version": 1,
        "system": {"generator": "scalar", "a": 0.9, "b": 1.0}, "setup": {"T": 1},
        "gamma_choice": "stationary_half"})");
    const CommandOutput gated = cmd_bound(early);
    CHECK(gated.exit_code == kExitFlagged);
    const Json g = Json::parse(gated.artifact);
    CHECK(g.at("bound_value").is_null());
    CHECK(g.at("burn_in").at("stationary_horizon").at("passed") == false);

    const ExperimentConfig fs_missing = parse_config(R"({"schema_version": 1,
        "system": {"generator": "scalar", "a": 0.9, "b": 1.0}, "bound": {"form": "finite_sample", "epsilon": 0.001}})");
    CHECK_THROWS_AS((void)cmd_bound(fs_missing), Error);

    const ExperimentConfig expo = parse_config(R"({"schema_version": 1,
        "system": {"generator": "exponential", "d_x": 6, "rho": 0.5}})");
    const Json x = Json::parse(cmd_bound(expo).artifact);
    CHECK(x.at("relaxation_holds") == true);
}

TEST_CASE("scan commands") {
    const CommandOutput expo = cmd_scan(parse_config(R"({"schema_version": 1, "setup": {"T": 1}, "scan": {}})"));
    const auto rows = split_csv(expo.artifact);
    REQUIRE(rows.size() == 7);
    CHECK(rows[0][0] == "d_x");
    const Json summary = Json::parse(expo.summary);
    CHECK(summary.at("slope_log4_closed_form").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(summary.at("slope_log4_exact_bound").get<double>() >= 0.9);
    CHECK(summary.at("all_relaxations_hold") == true);

    const CommandOutput dim = cmd_scan(parse_config(R"({"schema_version": 1, "setup": {"T": 1000}, "seed": 4,
        "scan": {"kind": "dimension", "instances_per_pair": 2}})"));
    const Json d = Json::parse(dim.summary);
    for (const auto& p : d.at("pairs")) {
        CHECK(p.at("ratio_to_first").get<double>() ==
              doctest::Approx(p.at("dimension_ratio_to_first").get<double>()).epsilon(1e-8));
    }
    CHECK(dim.exit_code == kExitSuccess);
}

TEST_CASE("compare command is deterministic across thread counts") {
    ExperimentConfig c = parse_config(kScalarCompare);
    const CommandOutput one = cmd_compare(c);
    c.threads = 3;
    const CommandOutput three = cmd_compare(c);
    CHECK(one.artifact == three.artifact);
    CHECK(one.summary == three.summary);
    const auto rows = split_csv(one.artifact);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"N", "n_mean", "stderr", "bound", "ratio"});
    CHECK(Json::parse(one.summary).at("rate_slope").is_number());

    c.trials = 10;
    CHECK_THROWS_AS((void)cmd_compare(c), Error);

    ExperimentConfig diag = parse_config(kScalarCompare);
    diag.compare.diagnostic_exact_model = true;
    CHECK(cmd_compare(diag).exit_code == kExitFlagged);
}

TEST_CASE("run_cli writes artifacts and reports errors") {
    const fs::path config = write_file("compare.json", kScalarCompare);
    const fs::path out_a = scratch_dir() / "a.csv";
    const fs::path out_b = scratch_dir() / "b.csv";
    std::ostringstream sink;
    std::ostringstream err;
    CHECK(run_cli("compare", config.string(), out_a.string(), std::nullopt, 1, sink, err) == kExitSuccess);
    CHECK(run_cli("compare", config.string(), out_b.string(), std::nullopt, 4, sink, err) == kExitSuccess);
    CHECK(slurp(out_a) == slurp(out_b));
    CHECK(fs::exists(out_a.string() + ".summary.json"));
    CHECK(slurp(out_a.string() + ".summary.json") == slurp(out_b.string() + ".summary.json"));

    std::ostringstream err2;
    CHECK(run_cli("bound", (fs::path(LQR_TEST_DATA_DIR) / "malformed.json").string(), "", std::nullopt,
                  std::nullopt, sink, err2) == kExitError);
    CHECK(err2.str().rfind("error: ", 0) == 0);
    CHECK(err2.str().find("line") != std::string::npos);

    std::ostringstream err3;
    CHECK(run_cli("bound", "", "", std::nullopt, std::nullopt, sink, err3) == kExitError);
    std::ostringstream err4;
    CHECK(run_cli("nonsense", config.string(), "", std::nullopt, std::nullopt, sink, err4) == kExitError);

    std::ostringstream stdout_sim;
    std::ostringstream err5;
    const fs::path sim = write_file("simulate.json", R"({"schema_version": 1,
        "system": {"generator": "scalar", "a": 0.9, "b": 1.0}, "setup": {"N": 20, "T": 50}, "trials": 10})");
    CHECK(run_cli("simulate", sim.string(), "", 5, std::nullopt, stdout_sim, err5) == kExitSuccess);
    const Json stats = Json::parse(stdout_sim.str());
    CHECK(stats.at("n_trials") == 10);
    CHECK(stats.at("seed") == 5);
}

TEST_CASE("verify suite") {
    const auto checks = run_verify_suite({});
    CHECK(checks.size() >= 10);
    for (const auto& c : checks) {
        CAPTURE(c.name);
        CAPTURE(c.detail);
        CHECK(c.passed);
    }
    VerifyOptions loose;
    loose.dare.tol = 1e-2;
    bool dare_failed = false;
    for (const auto& c : run_verify_suite(loose)) {
        if (c.name == "dare_residual_suite") dare_failed = !c.passed;
    }
    CHECK(dare_failed);
    CHECK(cmd_verify(loose).exit_code != kExitSuccess);
}
