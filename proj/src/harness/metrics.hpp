#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common/bytes.hpp"

namespace evov::harness {

// Per-transaction timeline, in simulated microseconds, observed at the
// designated observer peer. Stage latencies are exact differences, so
// endorse + order + validate always equals end-to-end.
struct tx_metric {
    hash256 txid{};
    std::string client;
    std::string op;
    std::string code;             // final validation verdict
    std::uint64_t block_seq = 0;
    std::uint32_t tx_index = 0;
    std::uint32_t retries = 0;
    std::uint64_t submit_us = 0;     // client handed the proposal to the network
    std::uint64_t endorsed_us = 0;   // client finished assembling endorsements
    std::uint64_t ordered_us = 0;    // the block containing it was cut
    std::uint64_t val_start_us = 0;  // observer peer dequeued the block for validation
    std::uint64_t committed_us = 0;  // observer peer committed the block

    std::uint64_t endorse_lat() const { return endorsed_us - submit_us; }
    std::uint64_t order_lat() const { return val_start_us - endorsed_us; }
    std::uint64_t validate_lat() const { return committed_us - val_start_us; }
    std::uint64_t e2e_lat() const { return committed_us - submit_us; }
};

struct block_metric {
    std::uint64_t seq = 0;
    std::uint32_t txs = 0;
    std::uint32_t valid = 0;
    std::uint64_t cut_us = 0;
    std::uint64_t received_us = 0;   // arrival at the observer peer
    std::uint64_t val_start_us = 0;
    std::uint64_t committed_us = 0;
    std::uint64_t vscc_span_us = 0;
    std::uint64_t rw_span_us = 0;
    std::uint64_t ledger_span_us = 0;
};

struct run_metrics {
    std::vector<tx_metric> txs;
    std::vector<block_metric> blocks;
    std::map<std::string, std::uint64_t> counters;

    void count(const std::string& key, std::uint64_t by = 1) { counters[key] += by; }
};

void write_tx_csv(const std::filesystem::path& p, const std::vector<tx_metric>& rows);
void write_block_csv(const std::filesystem::path& p, const std::vector<block_metric>& rows);

// Nearest-rank percentile over a copy of `v`; p in (0, 100].
double percentile(std::vector<double> v, double p);

// Percentiles are only meaningful with enough samples; below min_samples only
// count/mean/min/max are populated.
struct latency_summary {
    std::size_t count = 0;
    double mean = 0, min = 0, max = 0;
    std::optional<double> p50, p95, p99;
};

latency_summary summarize_latencies(const std::vector<double>& v, std::size_t min_samples = 1000);

// Per-stage latency samples of the committed-valid transactions, optionally
// restricted to commits inside [from_us, to_us]. By construction validate =
// vscc + rw + ledger and e2e = endorse + order + validate hold for every row;
// vscc/rw/ledger are the spans of the block the transaction committed in.
struct stage_samples {
    std::vector<double> e2e, endorse, order, validate, vscc, rw, ledger;
};

stage_samples collect_stage_samples(const run_metrics& m, std::uint64_t from_us = 0,
                                    std::uint64_t to_us = UINT64_MAX);

}  // namespace evov::harness
