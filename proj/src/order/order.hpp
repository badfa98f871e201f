#pragma once

#include "core/core.hpp"
#include "msp/msp.hpp"

namespace evov::order {

struct channel_exists : error {
    explicit channel_exists(const std::string& id) : error("channel exists: " + id) {}
};

struct access_denied : error {
    using error::error;
};

struct oversized_transaction : error {
    using error::error;
};

struct fatal_log_corruption : error {
    using error::error;
};

struct channel_config {
    std::string channel_id;
    std::uint32_t batch_max_count = 10;
    std::uint64_t batch_max_bytes = 1 << 20;
    std::uint64_t batch_timeout_us = 1'000'000;
    std::vector<std::string> broadcast_allow{"*"};  // "*" admits any channel member
    std::vector<std::string> deliver_allow{"*"};
    bytes config_payload;  // channel setup document carried by the genesis CONFIG tx
};

struct time_to_cut_entry {
    std::uint64_t intended_seq = 0;
};

// One slot of the total-order log: a transaction or a time-to-cut marker.
struct log_entry {
    enum class kind : std::uint8_t { tx = 0, time_to_cut = 1 };
    kind k = kind::tx;
    core::transaction tx;
    time_to_cut_entry ttc;
};

bytes encode_log_entry(const log_entry& e);
log_entry decode_log_entry(byte_view data);

// Crash-tolerant shared log abstraction: append assigns the next index.
class total_order_log {
public:
    std::uint64_t append(log_entry e);
    const log_entry& at(std::uint64_t index) const;
    std::uint64_t size() const { return entries_.size(); }

private:
    std::vector<log_entry> entries_;
};

core::block make_genesis(const channel_config& cfg, const msp::signing_identity& orderer);

bytes block_sign_bytes(const core::block& b);
bytes sign_block(const core::block& b, const msp::signing_identity& orderer);
bool verify_block_sig(const core::block& b, const msp::identity& orderer);

// Broadcast admission: allow-list and max-size checks. Orderers never inspect
// transaction state.
void check_broadcast(const channel_config& cfg, const msp::msp_directory& msp,
                     const core::transaction& tx, std::uint64_t encoded_size);
bool deliver_allowed(const channel_config& cfg, const msp::msp_directory& msp, const std::string& id);

// Deterministic batcher. Consuming the same log entries in the same order
// yields byte-identical blocks on every instance.
class block_cutter {
public:
    block_cutter(channel_config cfg, const msp::signing_identity* orderer, hash256 genesis_hash);

    // Feed the entry at `log_index`; indices must be contiguous from 0.
    // Returns any blocks cut by this entry (0, 1, or 2).
    std::vector<core::block> consume(std::uint64_t log_index, const log_entry& e);

    std::uint64_t next_seq() const { return next_seq_; }
    bool pending_empty() const { return pending_.empty(); }
    std::uint64_t consumed() const { return expected_index_; }

private:
    core::block cut();

    channel_config cfg_;
    const msp::signing_identity* orderer_;
    std::uint64_t next_seq_ = 1;
    hash256 prev_hash_{};
    std::vector<core::transaction> pending_;
    std::uint64_t pending_bytes_ = 0;
    std::uint64_t expected_index_ = 0;
};

// A single ordering-service node for one channel: cutter plus the chain of
// cut blocks (genesis included) it can serve to deliver clients.
class osn {
public:
    osn(channel_config cfg, const msp::signing_identity* orderer, core::block genesis);

    std::vector<const core::block*> consume(std::uint64_t log_index, const log_entry& e);

    const core::block& block_at(std::uint64_t seq) const;
    std::uint64_t chain_height() const { return chain_.size() - 1; }
    const channel_config& config() const { return cfg_; }
    const block_cutter& cutter() const { return cutter_; }

private:
    channel_config cfg_;
    block_cutter cutter_;
    std::vector<core::block> chain_;
};

// Channel registry: bootstrap creates the genesis block and the shared log.
class ordering_service {
public:
    ordering_service(const msp::msp_directory* msp, const msp::signing_identity* orderer)
        : msp_(msp), orderer_(orderer) {}

    struct channel {
        channel_config cfg;
        core::block genesis;
        total_order_log log;
    };

    channel& bootstrap_channel(channel_config cfg);  // throws channel_exists
    channel& get(const std::string& channel_id);
    bool has(const std::string& channel_id) const { return channels_.contains(channel_id); }

    // Append path used by broadcast frontends: admission checks then log append.
    std::uint64_t broadcast(const std::string& channel_id, core::transaction tx);

    const msp::msp_directory& msp() const { return *msp_; }
    const msp::signing_identity& orderer() const { return *orderer_; }

private:
    const msp::msp_directory* msp_;
    const msp::signing_identity* orderer_;
    std::map<std::string, channel> channels_;
};

}  // namespace evov::order
