#pragma once

#include "harness/net.hpp"

namespace evov::harness {

struct check_result {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct run_report {
    std::string scenario_name;
    std::uint64_t seed = 0;
    net_result net;
    std::vector<check_result> checks;
    std::uint64_t chain_height = 0;
    hash256 chain_digest{};  // over the observer's committed block bytes
    hash256 state_digest{};
    hash256 run_digest{};    // H(chain_digest || state_digest); equal across reruns of (scenario, seed)

    bool all_passed() const;
};

// Runs the scenario, then audits the outcome: cross-peer agreement, chain
// integrity, reproducibility of the validation verdicts, serial re-execution
// of the committed schedule, coin conservation, and metric consistency. When
// `rundir` is given, peer ledgers live underneath it and metrics.csv,
// blocks.csv, scenario.json and report.json are written there.
run_report run_scenario(const scenario& sc, std::optional<std::filesystem::path> rundir);

std::string report_to_json_text(const run_report& r);

}  // namespace evov::harness
