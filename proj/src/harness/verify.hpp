#pragma once

#include <filesystem>

#include "common/bytes.hpp"

namespace evov::harness {

// One defect located during offline verification. `peer` is empty for
// cross-peer findings; tx_index is -1 when the defect is not tied to a
// transaction.
struct verify_finding {
    std::string peer;
    std::string kind;
    std::uint64_t seq = 0;
    std::int64_t tx_index = -1;
    std::string detail;
};

struct peer_verify {
    std::string peer;
    std::uint64_t blocks = 0;  // intact, decodable blocks
    std::uint64_t txs = 0;
    std::uint64_t valid = 0;
    hash256 chain_digest{};
    hash256 state_digest{};
    bool ok = true;
};

struct verify_report {
    std::vector<peer_verify> peers;
    std::vector<verify_finding> findings;
    bool ok() const { return findings.empty(); }
};

// Trust-nothing audit of stored ledgers: scans the record files, decodes
// every block, checks sequence, hash chain, orderer signatures, re-runs
// validation from the genesis configuration alone and compares every verdict
// bit, recomputes the state, and cross-checks all peers against each other.
// Accepts a run directory (peers/<id>/ underneath) or a single ledger
// directory holding blocks.dat.
verify_report verify_rundir(const std::filesystem::path& dir);

verify_report verify_ledger_dir(const std::filesystem::path& dir, const std::string& peer_name);

std::string verify_report_to_json_text(const verify_report& r);

}  // namespace evov::harness
