#pragma once

#include "harness/runner.hpp"

namespace evov::harness {

// One benchmark measurement: a scenario run at a fixed block size and total
// client count, with its audited report and derived rates.
struct bench_cell {
    std::uint32_t block_size = 0;
    std::uint32_t clients = 0;
    double tps = 0;  // valid commits per second over the steady-state window
    latency_summary e2e, endorse, order, validate, vscc, rw, ledger;
    run_report report;
};

// Sweep description: for every block size, clients double from clients_start
// until throughput stops improving by at least min_gain (or clients_max is
// hit); the step just below saturation is reported per size.
struct bench_matrix {
    std::string name = "bench";
    scenario base;
    std::vector<std::uint32_t> block_sizes{10, 50, 100};
    std::uint32_t clients_start = 2;
    std::uint32_t clients_max = 32;
    double min_gain = 0.02;
};

bench_matrix matrix_from_json_text(const std::string& text);
bench_matrix load_matrix_file(const std::filesystem::path& p);

// Scenario for one cell: batch size and client count applied on top of the
// base, with a cell-specific derived seed.
scenario cell_scenario(const bench_matrix& m, std::uint32_t block_size, std::uint32_t clients);

bench_cell run_cell(const bench_matrix& m, std::uint32_t block_size, std::uint32_t clients);

struct bench_report {
    struct pick {
        std::uint32_t block_size = 0;
        std::uint32_t clients = 0;
        double tps = 0;
        double mean_e2e_us = 0;
    };
    std::string name;
    std::vector<bench_cell> cells;
    std::vector<pick> chosen;  // one per block size
    bool all_passed = true;    // every cell's run audit
};

// Runs the sweep; when out_dir is given writes summary.csv, latency_stages.csv,
// bench.json and per-cell metrics underneath it.
bench_report run_bench(const bench_matrix& m, std::optional<std::filesystem::path> out_dir);

std::string bench_report_to_json_text(const bench_report& r);

}  // namespace evov::harness
