#pragma once

#include "config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hjcli {

inline const std::vector<std::string> subcommands = {
    "solve",     "ergodic",    "bochner-check", "bernstein-audit",
    "thm1-sweep", "thm2-sweep", "constants",     "mfg"};

/// Runs one subcommand, writing report.json plus any CSV/SVG artifacts into `out_dir`.
/// The returned report carries `passed` and a `failures` list; gate violations found at
/// validation time appear as failures labelled with the assumption.
nlohmann::ordered_json run_command(const std::string& command, const RunConfig& cfg,
                                   const std::string& out_dir);

/// Report for a config rejected by an assumption gate before any run started.
nlohmann::ordered_json write_gate_report(const std::string& command, const std::string& out_dir,
                                         const hjlab::GateError& error);

/// Echo of the resolved configuration, as embedded in every report.
nlohmann::ordered_json config_json(const RunConfig& cfg);

}  // namespace hjcli
