#pragma once

#include "core/core.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>

namespace evov::ledger {

struct out_of_order : error {
    using error::error;
};

struct not_found : error {
    using error::error;
};

struct fatal_corruption : error {
    using error::error;
};

// Thrown by the test failpoint hook to simulate a crash mid-commit.
struct crash_injected : error {
    crash_injected() : error("crash injected") {}
};

struct versioned_entry {
    bytes value;
    core::version ver;
    bool operator==(const versioned_entry&) const = default;
};

using state_map = std::map<std::string, versioned_entry>;

// Immutable view of the latest state as of a committed height. Cheap to take
// and keep: the underlying map is never mutated after publication.
class state_snapshot {
public:
    state_snapshot() : map_(std::make_shared<state_map>()), height_(0) {}
    state_snapshot(std::shared_ptr<const state_map> m, std::uint64_t h) : map_(std::move(m)), height_(h) {}

    const versioned_entry* get(const std::string& key) const;
    // Entries with start <= key < end, in key order.
    std::vector<std::pair<std::string, versioned_entry>> range(const std::string& start,
                                                               const std::string& end) const;
    std::uint64_t height() const { return height_; }
    const state_map& map() const { return *map_; }

private:
    std::shared_ptr<const state_map> map_;
    std::uint64_t height_;
};

// Append-only record file: [u32 len][payload][u32 crc32]. Backed by an
// unbuffered fd so a crash leaves exactly the bytes written so far, or by a
// memory buffer when no directory is given.
class record_file {
public:
    record_file() = default;
    ~record_file();
    record_file(record_file&&) noexcept;
    record_file& operator=(record_file&&) noexcept;
    record_file(const record_file&) = delete;

    static record_file open(const std::optional<std::filesystem::path>& path);

    void append(byte_view payload);
    // Writes only the length prefix and a prefix of the payload; used by the
    // torn-write failpoint.
    void append_partial(byte_view payload, std::size_t payload_prefix);

    std::uint64_t size() const;
    bytes read(std::uint64_t off, std::size_t n) const;
    void truncate(std::uint64_t new_size);

    struct scan_result {
        std::vector<std::uint64_t> offsets;   // offset of each intact record
        std::vector<bytes> payloads;
        std::uint64_t good_end = 0;           // file offset after the last intact record
        bool torn_tail = false;
    };
    scan_result scan() const;

private:
    int fd_ = -1;
    bytes mem_;
    bool memory_ = true;
    mutable std::uint64_t cached_size_ = 0;
};

// Atomic small-value file (tmp + rename). Memory mode just stores the bytes.
class atomic_file {
public:
    static atomic_file open(const std::optional<std::filesystem::path>& path);
    void replace(byte_view content);
    std::optional<bytes> read() const;

private:
    std::optional<std::filesystem::path> path_;
    std::optional<bytes> mem_;
};

enum class commit_point : std::uint8_t {
    before_append = 0,
    mid_append = 1,
    after_append = 2,
    after_index = 3,
    after_state = 4,
};

struct ledger_options {
    std::optional<std::filesystem::path> dir;  // nullopt keeps everything in memory
    std::uint64_t checkpoint_every = 1;        // state checkpoint cadence, in blocks
};

// Re-derives the validity bits for a replayed block; recovery asserts the
// result matches the stored bitmask.
using revalidate_fn =
    std::function<std::vector<bool>(const core::block&, const state_snapshot& pre_state)>;

struct tx_location {
    std::uint64_t seq = 0;
    std::uint32_t tx_index = 0;
    bool valid = false;
};

class block_ledger {
public:
    // Opening runs recovery: rebuild indices from the block file, truncate a
    // torn trailing record, re-apply blocks past the newest state checkpoint.
    static block_ledger open(ledger_options opts, const revalidate_fn& revalidate = {});

    // Steps, in order: (1) append block+bitmask and flush, (2) update indices,
    // (3) apply valid writesets at version (seq, tx index), (4) savepoint.
    void commit_block(core::block b, const std::vector<bool>& validity);

    const versioned_entry* get_latest(const std::string& key) const;
    state_snapshot snapshot() const { return state_snapshot(state_, savepoint_); }

    core::block get_block(std::uint64_t seq) const;             // throws not_found
    bytes get_block_bytes(std::uint64_t seq) const;
    std::pair<tx_location, core::transaction> get_tx(const hash256& txid) const;  // throws not_found
    bool has_txid(const hash256& txid) const { return txid_index_.contains(txid); }

    bool empty() const { return offsets_.empty(); }
    std::uint64_t height() const;      // seq of the newest block; empty() must be false
    std::uint64_t savepoint() const { return savepoint_; }
    const hash256& last_hash() const { return last_hash_; }

    bytes state_bytes() const;         // canonical serialization of the latest state
    hash256 state_digest() const;

    // Test failpoint: throw crash_injected when commit of block `seq` reaches
    // `point`. One-shot.
    void set_failpoint(commit_point point, std::uint64_t seq);

private:
    block_ledger() = default;

    void fail_if(commit_point point, std::uint64_t seq);
    void apply_block_state(const core::block& b, const std::vector<bool>& validity);
    void write_checkpoint();
    void write_savepoint(std::uint64_t seq);

    ledger_options opts_;
    record_file blocks_;
    atomic_file savepoint_file_;
    atomic_file checkpoint_file_;

    std::vector<std::uint64_t> offsets_;
    std::map<hash256, tx_location> txid_index_;
    std::shared_ptr<const state_map> state_ = std::make_shared<state_map>();
    std::uint64_t savepoint_ = 0;
    hash256 last_hash_{};

    std::optional<std::pair<commit_point, std::uint64_t>> failpoint_;
};

bytes serialize_state(const state_map& m);
state_map deserialize_state(byte_view data);

}  // namespace evov::ledger
