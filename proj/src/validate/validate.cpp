#include "validate/validate.hpp"

#include <set>
#include <thread>

#include "core/codec.hpp"

namespace evov::validate {

using namespace core;

const char* tx_code_name(tx_code c) {
    switch (c) {
        case tx_code::valid: return "valid";
        case tx_code::bad_endorsement: return "bad_endorsement";
        case tx_code::mvcc_conflict: return "mvcc_conflict";
        case tx_code::phantom_read: return "phantom_read";
        case tx_code::duplicate_txid: return "duplicate_txid";
        case tx_code::bad_format: return "bad_format";
    }
    return "unknown";
}

void vscc_registry::add(const std::string& id, vscc_fn fn) { fns_[id] = std::move(fn); }

const vscc_fn* vscc_registry::find(const std::string& id) const {
    auto it = fns_.find(id);
    return it == fns_.end() ? nullptr : &it->second;
}

bool default_vscc(const vscc_input& in, std::string& reason) {
    const auto& tx = in.tx;
    hash256 expect_txid;
    try {
        expect_txid = derive_txid(tx.prop.client_id, tx.prop.nonce);
    } catch (const error&) {
        reason = "txid underivable";
        return false;
    }
    if (expect_txid != tx.prop.tx_id) {
        reason = "txid mismatch";
        return false;
    }
    const auto* client = in.msp.find(tx.prop.client_id);
    if (client == nullptr) {
        reason = "unknown client";
        return false;
    }
    if (!msp::verify(*client, proposal_sign_bytes(tx.prop), tx.prop.client_sig)) {
        reason = "bad client signature";
        return false;
    }

    auto rwset_bytes = encode_bytes(tx.rwset);
    std::vector<endorse::principal> principals;
    std::set<std::string> seen;
    for (const auto& e : tx.endorsements) {
        if (e.tx_id != tx.prop.tx_id) {
            reason = "endorsement for different txid";
            return false;
        }
        if (encode_bytes(e.rwset) != rwset_bytes) {
            reason = "endorsement rwset mismatch";
            return false;
        }
        const auto* endorser = in.msp.find(e.endorser_id);
        if (endorser == nullptr || endorser->r != msp::role::peer) {
            reason = "endorser not a peer: " + e.endorser_id;
            return false;
        }
        if (!msp::verify(*endorser, endorsement_sign_bytes(e.tx_id, e.rwset, e.response),
                         e.signature)) {
            reason = "bad endorsement signature: " + e.endorser_id;
            return false;
        }
        if (seen.insert(e.endorser_id).second) {
            principals.push_back({endorser->id, endorser->org});
        }
    }
    if (!endorse::eval_policy(in.policy, principals)) {
        reason = "endorsement policy unsatisfied";
        return false;
    }
    return true;
}

vscc_registry make_vscc_registry() {
    vscc_registry r;
    r.add("default", default_vscc);
    return r;
}

static tx_code vscc_check_tx(const validation_context& ctx, const core::transaction& tx,
                             const ledger::state_snapshot& pre_state,
                             const std::map<std::string, endorse::endorsement_policy>& policies) {
    // Non-application entries (config, stray time-to-cut markers) carry no
    // state effect and pass through.
    if (tx.type != tx_type::normal) return tx_code::valid;
    const auto* def = ctx.registry->find(ctx.channel, tx.prop.chaincode_id);
    if (def == nullptr) return tx_code::bad_format;
    const auto* fn = ctx.vsccs->find(def->vscc_id);
    if (fn == nullptr) return tx_code::bad_format;
    if (tx.endorsements.empty()) return tx_code::bad_format;
    vscc_input in{*ctx.msp, ctx.channel, *def, policies.at(def->id), tx, pre_state};
    std::string reason;
    try {
        if (!(*fn)(in, reason)) return tx_code::bad_endorsement;
    } catch (const std::exception&) {
        return tx_code::bad_endorsement;
    }
    return tx_code::valid;
}

std::vector<tx_code> vscc_check_block(const validation_context& ctx, const core::block& b,
                                      const ledger::state_snapshot& pre_state) {
    std::vector<tx_code> codes(b.txs.size(), tx_code::valid);
    // Parse each referenced policy once up front; parse failures condemn every
    // transaction of that chaincode.
    std::map<std::string, endorse::endorsement_policy> policies;
    std::map<std::string, bool> parse_ok;
    for (const auto& tx : b.txs) {
        if (tx.type != tx_type::normal) continue;
        const auto* def = ctx.registry->find(ctx.channel, tx.prop.chaincode_id);
        if (def == nullptr || parse_ok.contains(def->id)) continue;
        try {
            policies.emplace(def->id, endorse::parse_policy(def->policy));
            parse_ok[def->id] = true;
        } catch (const endorse::policy_parse_error&) {
            parse_ok[def->id] = false;
        }
    }

    auto check_one = [&](std::size_t i) {
        const auto& tx = b.txs[i];
        if (tx.type == tx_type::normal) {
            const auto* def = ctx.registry->find(ctx.channel, tx.prop.chaincode_id);
            if (def != nullptr && !parse_ok.at(def->id)) {
                codes[i] = tx_code::bad_format;
                return;
            }
        }
        codes[i] = vscc_check_tx(ctx, tx, pre_state, policies);
    };

    if (ctx.workers > 1 && b.txs.size() > 1) {
        auto n = std::min<std::size_t>(ctx.workers, b.txs.size());
        std::vector<std::thread> pool;
        pool.reserve(n);
        for (std::size_t w = 0; w < n; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < b.txs.size(); i += n) check_one(i);
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < b.txs.size(); ++i) check_one(i);
    }
    return codes;
}

namespace {

// Working view during the sequential phase: the block-start snapshot plus the
// writes of earlier valid transactions of the same block.
struct overlay_state {
    const ledger::state_snapshot& snap;
    // nullopt marks a deletion by an earlier valid transaction.
    std::map<std::string, std::optional<version>> writes;

    std::optional<version> current(const std::string& key) const {
        auto it = writes.find(key);
        if (it != writes.end()) return it->second;
        const auto* e = snap.get(key);
        if (e == nullptr) return std::nullopt;
        return e->ver;
    }

    std::vector<std::pair<std::string, ledger::versioned_entry>> range(
        const std::string& start, const std::string& end) const {
        auto base = snap.range(start, end);
        std::vector<std::pair<std::string, ledger::versioned_entry>> out;
        out.reserve(base.size());
        auto bit = base.begin();
        auto wit = writes.lower_bound(start);
        auto emit_write = [&](const std::string& key, const std::optional<version>& v) {
            if (v) out.emplace_back(key, ledger::versioned_entry{{}, *v});
        };
        while (bit != base.end() || (wit != writes.end() && wit->first < end)) {
            bool take_write;
            if (bit == base.end()) {
                take_write = true;
            } else if (wit == writes.end() || wit->first >= end) {
                take_write = false;
            } else if (wit->first < bit->first) {
                take_write = true;
            } else if (wit->first == bit->first) {
                ++bit;  // overlay shadows the snapshot entry
                take_write = true;
            } else {
                take_write = false;
            }
            if (take_write) {
                emit_write(wit->first, wit->second);
                ++wit;
            } else {
                out.push_back(*bit);
                ++bit;
            }
        }
        return out;
    }
};

}  // namespace

std::vector<tx_code> rw_check_block(const core::block& b, std::vector<tx_code> codes,
                                    const ledger::state_snapshot& pre_state,
                                    const ledger::block_ledger& led) {
    overlay_state ov{pre_state, {}};
    // Any earlier occurrence of a txid, committed or in-block, valid or not,
    // condemns later duplicates.
    std::set<hash256> in_block;
    for (std::size_t i = 0; i < b.txs.size(); ++i) {
        const auto& tx = b.txs[i];
        if (tx.type != tx_type::normal) continue;
        if (codes[i] != tx_code::valid) {
            in_block.insert(tx.prop.tx_id);
            continue;
        }
        if (led.has_txid(tx.prop.tx_id) || in_block.contains(tx.prop.tx_id)) {
            codes[i] = tx_code::duplicate_txid;
            in_block.insert(tx.prop.tx_id);
            continue;
        }
        in_block.insert(tx.prop.tx_id);

        for (const auto& rd : tx.rwset.reads) {
            auto cur = ov.current(rd.key);
            if (rd.ver.has_value() ? (cur != rd.ver) : cur.has_value()) {
                codes[i] = tx_code::mvcc_conflict;
                break;
            }
        }
        if (codes[i] != tx_code::valid) continue;

        for (const auto& rr : tx.rwset.range_reads) {
            std::string start, end;
            try {
                std::tie(start, end) = chaincode::decode_range_query(rr.query);
            } catch (const std::exception&) {
                codes[i] = tx_code::bad_format;
                break;
            }
            if (chaincode::hash_range_result(ov.range(start, end)) != rr.result_hash) {
                codes[i] = tx_code::phantom_read;
                break;
            }
        }
        if (codes[i] != tx_code::valid) continue;

        version ver{b.header.seq, static_cast<std::uint64_t>(i)};
        for (const auto& wr : tx.rwset.writes) {
            if (wr.kind == write_kind::put) {
                ov.writes[wr.key] = ver;
            } else {
                ov.writes[wr.key] = std::nullopt;
            }
        }
    }
    return codes;
}

std::vector<tx_code> validate_block(const validation_context& ctx, const core::block& b,
                                    const ledger::block_ledger& led) {
    auto snap = led.snapshot();
    auto codes = vscc_check_block(ctx, b, snap);
    return rw_check_block(b, std::move(codes), snap, led);
}

std::vector<bool> codes_to_validity(const std::vector<tx_code>& codes) {
    std::vector<bool> out(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) out[i] = codes[i] == tx_code::valid;
    return out;
}

}  // namespace evov::validate
