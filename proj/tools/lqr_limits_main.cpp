// lqr-limits: lower bounds on the excess cost of offline LQR learning.

#include <iostream>

#include <CLI11.hpp>

#include "lqr_limits/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Lower bounds on the excess cost of learning LQR controllers from offline data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    const std::vector<std::pair<const char*, const char*>> commands{
        {"bound", "compute a bound report (JSON)"},
        {"figure1", "scalar bound curve over a gamma grid (CSV)"},
        {"scan", "dimension or exponential scaling scan (CSV)"},
        {"compare", "certainty-equivalent learner against the asymptotic bound (CSV)"},
        {"simulate", "Monte Carlo excess cost of the learner (JSON)"},
        {"verify", "run the numerical oracle suite"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--out", out_path, "output file (default: stdout)");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "override the config thread count (0: all cores)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? lqr_limits::kExitSuccess : lqr_limits::kExitError;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    return lqr_limits::run_cli(command, config_path, out_path, seed, threads, std::cout, std::cerr);
}
