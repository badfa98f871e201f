#include "order/order.hpp"

#include <algorithm>

#include "core/codec.hpp"

namespace evov::order {

using namespace core;

bytes encode_log_entry(const log_entry& e) {
    wire_writer w;
    w.u8(static_cast<std::uint8_t>(e.k));
    if (e.k == log_entry::kind::tx) {
        encode(w, e.tx);
    } else {
        w.u64(e.ttc.intended_seq);
    }
    return w.take();
}

log_entry decode_log_entry(byte_view data) {
    wire_reader r(data);
    log_entry e;
    auto k = r.u8();
    if (k > 1) throw codec_error("log entry kind out of range");
    e.k = static_cast<log_entry::kind>(k);
    if (e.k == log_entry::kind::tx) {
        e.tx = decode_transaction(r);
    } else {
        e.ttc.intended_seq = r.u64();
    }
    r.expect_end();
    return e;
}

std::uint64_t total_order_log::append(log_entry e) {
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

const log_entry& total_order_log::at(std::uint64_t index) const {
    if (index >= entries_.size()) throw error("log index out of range");
    return entries_[index];
}

bytes block_sign_bytes(const core::block& b) {
    auto h = hash_block(b);
    return bytes(h.begin(), h.end());
}

bytes sign_block(const core::block& b, const msp::signing_identity& orderer) {
    return msp::sign(orderer, block_sign_bytes(b));
}

bool verify_block_sig(const core::block& b, const msp::identity& orderer) {
    return msp::verify(orderer, block_sign_bytes(b), b.orderer_sig);
}

core::block make_genesis(const channel_config& cfg, const msp::signing_identity& orderer) {
    proposal p;
    p.client_id = orderer.ident.id;
    p.chaincode_id = "";
    p.operation = "config";
    p.args = {cfg.config_payload};
    p.nonce = str_bytes("genesis:" + cfg.channel_id);
    p.tx_id = derive_txid(p.client_id, p.nonce);
    p.client_sig = msp::sign(orderer, proposal_sign_bytes(p));

    transaction tx;
    tx.type = tx_type::config;
    tx.prop = std::move(p);

    block b;
    b.header.seq = 0;
    b.header.prev_hash = hash256{};
    b.txs.push_back(std::move(tx));
    b.orderer_sig = sign_block(b, orderer);
    return b;
}

static bool allow_matches(const std::vector<std::string>& allow, const msp::msp_directory& msp,
                          const std::string& id) {
    const auto* ident = msp.find(id);
    if (ident == nullptr) return false;
    if (allow.empty()) return true;
    for (const auto& a : allow) {
        if (a == "*" || a == id) return true;
        if (a.starts_with("org:") && ident->org == a.substr(4)) return true;
    }
    return false;
}

void check_broadcast(const channel_config& cfg, const msp::msp_directory& msp,
                     const core::transaction& tx, std::uint64_t encoded_size) {
    if (!allow_matches(cfg.broadcast_allow, msp, tx.prop.client_id)) {
        throw access_denied("broadcast denied for " + tx.prop.client_id);
    }
    if (encoded_size > cfg.batch_max_bytes) {
        throw oversized_transaction("transaction exceeds batch_max_bytes");
    }
}

bool deliver_allowed(const channel_config& cfg, const msp::msp_directory& msp, const std::string& id) {
    return allow_matches(cfg.deliver_allow, msp, id);
}

block_cutter::block_cutter(channel_config cfg, const msp::signing_identity* orderer,
                           hash256 genesis_hash)
    : cfg_(std::move(cfg)), orderer_(orderer), prev_hash_(genesis_hash) {}

core::block block_cutter::cut() {
    block b;
    b.header.seq = next_seq_;
    b.header.prev_hash = prev_hash_;
    b.txs = std::move(pending_);
    pending_.clear();
    pending_bytes_ = 0;
    b.orderer_sig = sign_block(b, *orderer_);
    prev_hash_ = hash_block(b);
    ++next_seq_;
    return b;
}

std::vector<core::block> block_cutter::consume(std::uint64_t log_index, const log_entry& e) {
    if (log_index != expected_index_) {
        throw fatal_log_corruption("log gap: expected index " + std::to_string(expected_index_) +
                                   ", got " + std::to_string(log_index));
    }
    ++expected_index_;

    std::vector<block> out;
    if (e.k == log_entry::kind::time_to_cut) {
        // Only the first effective timeout for a block wins; stale markers
        // (wrong seq, or the batch already cut) are ignored.
        if (e.ttc.intended_seq == next_seq_ && !pending_.empty()) {
            out.push_back(cut());
        }
        return out;
    }

    auto sz = encoded_size(e.tx);
    if (!pending_.empty() && pending_bytes_ + sz > cfg_.batch_max_bytes) {
        out.push_back(cut());
    }
    pending_.push_back(e.tx);
    pending_bytes_ += sz;
    if (pending_.size() >= cfg_.batch_max_count || pending_bytes_ > cfg_.batch_max_bytes) {
        // Second clause: a lone transaction larger than the cap still ships,
        // alone, rather than wedging the batcher.
        out.push_back(cut());
    }
    return out;
}

osn::osn(channel_config cfg, const msp::signing_identity* orderer, core::block genesis)
    : cfg_(cfg), cutter_(cfg, orderer, hash_block(genesis)) {
    chain_.push_back(std::move(genesis));
}

std::vector<const core::block*> osn::consume(std::uint64_t log_index, const log_entry& e) {
    auto blocks = cutter_.consume(log_index, e);
    std::vector<const block*> out;
    for (auto& b : blocks) {
        chain_.push_back(std::move(b));
        out.push_back(&chain_.back());
    }
    return out;
}

const core::block& osn::block_at(std::uint64_t seq) const {
    if (seq >= chain_.size()) throw error("block seq out of range");
    return chain_[seq];
}

ordering_service::channel& ordering_service::bootstrap_channel(channel_config cfg) {
    if (channels_.contains(cfg.channel_id)) throw channel_exists(cfg.channel_id);
    auto genesis = make_genesis(cfg, *orderer_);
    auto id = cfg.channel_id;
    auto [it, _] = channels_.emplace(id, channel{std::move(cfg), std::move(genesis), {}});
    return it->second;
}

ordering_service::channel& ordering_service::get(const std::string& channel_id) {
    auto it = channels_.find(channel_id);
    if (it == channels_.end()) throw error("unknown channel: " + channel_id);
    return it->second;
}

std::uint64_t ordering_service::broadcast(const std::string& channel_id, core::transaction tx) {
    auto& ch = get(channel_id);
    check_broadcast(ch.cfg, *msp_, tx, encoded_size(tx));
    log_entry e;
    e.k = log_entry::kind::tx;
    e.tx = std::move(tx);
    return ch.log.append(std::move(e));
}

}  // namespace evov::order
