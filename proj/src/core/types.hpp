#pragma once

#include "common/bytes.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace evov::core {

// Version of a committed key: position of the transaction that last wrote it.
struct version {
    std::uint64_t block_num = 0;
    std::uint64_t tx_num = 0;
    auto operator<=>(const version&) const = default;
};

// Lexicographic order, block number first.
std::strong_ordering compare_versions(const version& a, const version& b);

// A read observed during simulation. Absent keys carry no version (NIL).
struct read_entry {
    std::string key;
    std::optional<version> ver;
    bool operator==(const read_entry&) const = default;
};

// Range query executed during simulation: the query itself plus a hash of the
// ordered (key, version) result list, used for phantom detection at validation.
struct range_read {
    std::string query;
    hash256 result_hash{};
    bool operator==(const range_read&) const = default;
};

enum class write_kind : std::uint8_t { put = 0, del = 1 };

struct write_entry {
    std::string key;
    write_kind kind = write_kind::put;
    bytes value;  // empty for deletes
    bool operator==(const write_entry&) const = default;
};

// readset/writeset keys are unique per set; writes keep simulation order.
struct read_write_set {
    std::vector<read_entry> reads;
    std::vector<range_read> range_reads;
    std::vector<write_entry> writes;
    bool operator==(const read_write_set&) const = default;
};

// Client-signed invocation request. tx_id = H(encode(client_id) || nonce).
struct proposal {
    std::string client_id;
    std::string chaincode_id;
    std::string operation;
    std::vector<bytes> args;
    bytes nonce;
    hash256 tx_id{};
    bytes client_sig;
    bool operator==(const proposal&) const = default;
};

// Endorser's signed statement over (tx_id, rwset, response).
struct endorsement {
    hash256 tx_id{};
    std::string endorser_id;
    read_write_set rwset;
    bytes response;
    bytes signature;
    bool operator==(const endorsement&) const = default;
};

enum class tx_type : std::uint8_t { normal = 0, time_to_cut = 1, config = 2 };

struct transaction {
    tx_type type = tx_type::normal;
    proposal prop;
    read_write_set rwset;
    std::vector<endorsement> endorsements;
    bool operator==(const transaction&) const = default;
};

struct block_header {
    std::uint64_t seq = 0;
    hash256 prev_hash{};  // all zero for the genesis block
    bool operator==(const block_header&) const = default;
};

// metadata_bitmask (per-tx validity bits) and orderer_sig are attached after
// ordering/validation and are excluded from the block hash.
struct block {
    block_header header;
    std::vector<transaction> txs;
    std::optional<bytes> metadata_bitmask;
    bytes orderer_sig;
    bool operator==(const block&) const = default;
};

// Bit i of a packed bitmask, bit 0 = first transaction.
bool bitmask_get(const bytes& mask, std::size_t i);
bytes bitmask_pack(const std::vector<bool>& bits);

}  // namespace evov::core
