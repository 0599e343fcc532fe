#include "commands.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"hjlab: viscous Hamilton-Jacobi and mean field game experiments"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    app.add_option("command", command, "subcommand")
        ->required()
        ->check(CLI::IsMember(hjcli::subcommands));
    app.add_option("--config", config_path, "run config (key = value lines, [section] headers)")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
    app.add_option("--seed", seed, "random seed (overrides [output] seed)");
    app.add_option("--threads", threads, "threads for the linear algebra")
        ->check(CLI::PositiveNumber);
    app.footer("subcommands: solve, ergodic, bochner-check, bernstein-audit, thm1-sweep, "
               "thm2-sweep, constants, mfg\nexit status: 0 all checks passed, 1 a check or "
               "assumption failed, 2 usage or config error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Eigen::setNbThreads(threads);
    hjcli::RunConfig cfg;
    try {
        cfg = config_path.empty() ? hjcli::parse_config("") : hjcli::load_config(config_path);
    } catch (const hjcli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const hjlab::GateError& e) {
        hjcli::write_gate_report(command, out_dir.empty() ? cfg.out_dir : out_dir, e);
        std::cerr << "FAIL gate: " << e.what() << '\n';
        return 1;
    }
    if (seed) {
        cfg.seed = *seed;
    }
    if (!out_dir.empty()) {
        cfg.out_dir = out_dir;
    }

    nlohmann::ordered_json report;
    try {
        report = hjcli::run_command(command, cfg, cfg.out_dir);
    } catch (const hjcli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    const auto& failures = report["failures"];
    for (const auto& f : failures) {
        std::cerr << "FAIL " << f["check"].get<std::string>() << ": "
                  << f["detail"].get<std::string>() << '\n';
    }
    std::cout << command << ": " << (failures.empty() ? "passed" : "failed") << " ("
              << cfg.out_dir << "/report.json)\n";
    return failures.empty() ? 0 : 1;
}
