#include "fabcoin/fabcoin.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "core/codec.hpp"

namespace evov::fabcoin {

using namespace core;

bytes encode_coin(const coin_value& c) {
    wire_writer w;
    w.u64(c.amount);
    w.str(c.owner);
    w.str(c.label);
    return w.take();
}

coin_value decode_coin(byte_view data) {
    wire_reader r(data);
    coin_value c;
    c.amount = r.u64();
    c.owner = r.str();
    c.label = r.str();
    r.expect_end();
    return c;
}

std::string coin_key(const hash256& txid, std::uint32_t j) {
    return to_hex(byte_view(txid.data(), txid.size())) + "." + std::to_string(j);
}

static void encode_request_core(wire_writer& w, const request& r) {
    w.u8(static_cast<std::uint8_t>(r.kind));
    w.u32(static_cast<std::uint32_t>(r.inputs.size()));
    for (const auto& k : r.inputs) w.str(k);
    w.u32(static_cast<std::uint32_t>(r.outputs.size()));
    for (const auto& o : r.outputs) {
        w.u64(o.amount);
        w.str(o.owner);
    }
    w.str(r.label);
}

bytes encode_request(const request& r) {
    wire_writer w;
    encode_request_core(w, r);
    w.u32(static_cast<std::uint32_t>(r.sigs.size()));
    for (const auto& [id, sig] : r.sigs) {
        w.str(id);
        w.blob(as_view(sig));
    }
    return w.take();
}

request decode_request(byte_view data) {
    wire_reader r(data);
    request out;
    auto k = r.u8();
    if (k > 1) throw codec_error("request kind out of range");
    out.kind = static_cast<request_kind>(k);
    auto ni = r.u32();
    out.inputs.reserve(ni);
    for (std::uint32_t i = 0; i < ni; ++i) out.inputs.push_back(r.str());
    auto no = r.u32();
    out.outputs.reserve(no);
    for (std::uint32_t i = 0; i < no; ++i) {
        output_spec o;
        o.amount = r.u64();
        o.owner = r.str();
        out.outputs.push_back(std::move(o));
    }
    out.label = r.str();
    auto ns = r.u32();
    out.sigs.reserve(ns);
    for (std::uint32_t i = 0; i < ns; ++i) {
        auto id = r.str();
        auto sig = r.blob();
        out.sigs.emplace_back(std::move(id), std::move(sig));
    }
    r.expect_end();
    return out;
}

bytes request_core_bytes(const request& r) {
    wire_writer w;
    encode_request_core(w, r);
    return w.take();
}

bytes request_sign_msg(const request& r, const bytes& nonce) {
    auto msg = request_core_bytes(r);
    msg.insert(msg.end(), nonce.begin(), nonce.end());
    return msg;
}

request make_mint_request(std::vector<output_spec> outputs, std::string label,
                          const std::vector<const msp::signing_identity*>& cbs,
                          const bytes& nonce) {
    request r;
    r.kind = request_kind::mint;
    r.outputs = std::move(outputs);
    r.label = std::move(label);
    auto msg = request_sign_msg(r, nonce);
    for (const auto* cb : cbs) r.sigs.emplace_back(cb->ident.id, msp::sign(*cb, msg));
    return r;
}

request make_spend_request(std::vector<std::string> inputs, std::vector<output_spec> outputs,
                           std::string label,
                           const std::vector<const msp::signing_identity*>& owners,
                           const bytes& nonce) {
    request r;
    r.kind = request_kind::spend;
    r.inputs = std::move(inputs);
    r.outputs = std::move(outputs);
    r.label = std::move(label);
    auto msg = request_sign_msg(r, nonce);
    for (const auto* o : owners) r.sigs.emplace_back(o->ident.id, msp::sign(*o, msg));
    return r;
}

static std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* what) {
    if (a > std::numeric_limits<std::uint64_t>::max() - b) throw bad_request(what);
    return a + b;
}

// Structural checks shared by the handler and the validator. Throws
// bad_request on violation.
static void check_request_shape(const request& r, request_kind expected) {
    if (r.kind != expected) throw bad_request("request kind does not match operation");
    if (r.outputs.empty()) throw bad_request("no outputs");
    for (const auto& o : r.outputs) {
        if (o.amount == 0) throw bad_request("zero-amount output");
        if (o.owner.empty()) throw bad_request("empty output owner");
    }
    if (r.label.empty()) throw bad_request("empty label");
    if (expected == request_kind::mint) {
        if (!r.inputs.empty()) throw bad_request("mint with inputs");
    } else {
        if (r.inputs.empty()) throw bad_request("spend without inputs");
        std::set<std::string> distinct(r.inputs.begin(), r.inputs.end());
        if (distinct.size() != r.inputs.size()) throw bad_request("duplicate input");
    }
}

static request parse_proposal_request(const std::string& operation,
                                      const std::vector<bytes>& args) {
    if (args.size() != 1) throw bad_request("expected exactly one argument");
    auto r = decode_request(as_view(args[0]));
    if (operation == "mint") {
        check_request_shape(r, request_kind::mint);
    } else if (operation == "spend") {
        check_request_shape(r, request_kind::spend);
    } else {
        throw bad_request("unknown operation: " + operation);
    }
    return r;
}

static void handle_fabcoin(chaincode::sim_context& ctx) {
    auto req = parse_proposal_request(ctx.operation(), ctx.args());
    std::uint64_t sum_in = 0;
    if (req.kind == request_kind::spend) {
        for (const auto& key : req.inputs) {
            auto val = ctx.get_state(key);
            if (!val) throw bad_request("missing input: " + key);
            auto coin = decode_coin(as_view(*val));
            if (coin.label != req.label) throw bad_request("label mismatch on input: " + key);
            sum_in = checked_add(sum_in, coin.amount, "input sum overflow");
            ctx.del_state(key);
        }
    }
    std::uint64_t sum_out = 0;
    for (const auto& o : req.outputs) sum_out = checked_add(sum_out, o.amount, "output sum overflow");
    if (req.kind == request_kind::spend && sum_out > sum_in) {
        throw bad_request("outputs exceed inputs");
    }
    wire_writer resp;
    resp.u32(static_cast<std::uint32_t>(req.outputs.size()));
    for (std::uint32_t j = 0; j < req.outputs.size(); ++j) {
        auto key = coin_key(ctx.tx_id(), j + 1);
        ctx.put_state(key, encode_coin({req.outputs[j].amount, req.outputs[j].owner, req.label}));
        resp.str(key);
    }
    ctx.set_response(resp.take());
}

chaincode::chaincode_definition make_chaincode(std::string id, std::string policy) {
    chaincode::chaincode_definition def;
    def.id = std::move(id);
    def.handler = handle_fabcoin;
    def.policy = std::move(policy);
    def.vscc_id = "fabcoin";
    return def;
}

// Every distinct id in `required` must have a verifying signature in `sigs`.
static bool all_signed(const std::set<std::string>& required,
                       const std::vector<std::pair<std::string, bytes>>& sigs,
                       const msp::msp_directory& msp, const bytes& msg, std::string& reason) {
    for (const auto& id : required) {
        bool ok = false;
        for (const auto& [sid, sig] : sigs) {
            if (sid != id) continue;
            const auto* signer = msp.find(sid);
            if (signer != nullptr && msp::verify(*signer, msg, sig)) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            reason = "missing or invalid authorization from " + id;
            return false;
        }
    }
    return true;
}

validate::vscc_fn make_vscc(cb_config cfg) {
    return [cfg = std::move(cfg)](const validate::vscc_input& in, std::string& reason) -> bool {
        const auto& tx = in.tx;
        const auto& prop = tx.prop;

        hash256 expect_txid;
        try {
            expect_txid = derive_txid(prop.client_id, prop.nonce);
        } catch (const error&) {
            reason = "txid underivable";
            return false;
        }
        if (expect_txid != prop.tx_id) {
            reason = "txid mismatch";
            return false;
        }
        const auto* client = in.msp.find(prop.client_id);
        if (client == nullptr || !msp::verify(*client, proposal_sign_bytes(prop), prop.client_sig)) {
            reason = "bad client signature";
            return false;
        }
        // At least one verifiable peer endorsement over this exact rwset.
        bool endorsed = false;
        for (const auto& e : tx.endorsements) {
            const auto* endorser = in.msp.find(e.endorser_id);
            if (endorser == nullptr || endorser->r != msp::role::peer) continue;
            if (e.tx_id != prop.tx_id) continue;
            if (encode_bytes(e.rwset) != encode_bytes(tx.rwset)) continue;
            if (msp::verify(*endorser, endorsement_sign_bytes(e.tx_id, e.rwset, e.response),
                            e.signature)) {
                endorsed = true;
                break;
            }
        }
        if (!endorsed) {
            reason = "no valid endorsement";
            return false;
        }

        request req;
        try {
            req = parse_proposal_request(prop.operation, prop.args);
        } catch (const std::exception& e) {
            reason = e.what();
            return false;
        }
        auto sign_msg = request_sign_msg(req, prop.nonce);

        std::uint64_t sum_in = 0;
        std::vector<std::string> full_inputs;
        if (req.kind == request_kind::mint) {
            std::set<std::string> valid_cbs;
            for (const auto& [sid, sig] : req.sigs) {
                if (std::find(cfg.cb_ids.begin(), cfg.cb_ids.end(), sid) == cfg.cb_ids.end())
                    continue;
                const auto* cb = in.msp.find(sid);
                if (cb != nullptr && msp::verify(*cb, sign_msg, sig)) valid_cbs.insert(sid);
            }
            if (valid_cbs.size() < cfg.threshold) {
                reason = "insufficient central-bank signatures";
                return false;
            }
        } else {
            std::set<std::string> owners;
            for (const auto& key : req.inputs) {
                auto full = chaincode::namespaced_key(in.def.id, key);
                full_inputs.push_back(full);
                const auto* entry = in.pre_state.get(full);
                if (entry == nullptr) {
                    reason = "missing input: " + key;
                    return false;
                }
                coin_value coin;
                try {
                    coin = decode_coin(as_view(entry->value));
                } catch (const std::exception&) {
                    reason = "input is not a coin: " + key;
                    return false;
                }
                if (coin.label != req.label) {
                    reason = "label mismatch on input: " + key;
                    return false;
                }
                try {
                    sum_in = checked_add(sum_in, coin.amount, "input sum overflow");
                } catch (const std::exception& e) {
                    reason = e.what();
                    return false;
                }
                owners.insert(coin.owner);
            }
            if (!all_signed(owners, req.sigs, in.msp, sign_msg, reason)) return false;

            std::uint64_t sum_out = 0;
            for (const auto& o : req.outputs) {
                try {
                    sum_out = checked_add(sum_out, o.amount, "output sum overflow");
                } catch (const std::exception& e) {
                    reason = e.what();
                    return false;
                }
            }
            if (sum_out > sum_in) {
                reason = "outputs exceed inputs";
                return false;
            }
        }

        // The read set must cover exactly the inputs (key order), each seen as
        // existing at simulation time; no range reads.
        std::vector<std::string> expect_reads = full_inputs;
        std::sort(expect_reads.begin(), expect_reads.end());
        if (tx.rwset.reads.size() != expect_reads.size()) {
            reason = "unexpected read set";
            return false;
        }
        for (std::size_t i = 0; i < expect_reads.size(); ++i) {
            if (tx.rwset.reads[i].key != expect_reads[i] || !tx.rwset.reads[i].ver.has_value()) {
                reason = "unexpected read set";
                return false;
            }
        }
        if (!tx.rwset.range_reads.empty()) {
            reason = "unexpected range read";
            return false;
        }

        // The write set must be exactly: delete each input (request order),
        // then create each output coin.
        std::vector<write_entry> expect_writes;
        for (const auto& full : full_inputs) {
            expect_writes.push_back({full, write_kind::del, {}});
        }
        for (std::uint32_t j = 0; j < req.outputs.size(); ++j) {
            auto full = chaincode::namespaced_key(in.def.id, coin_key(prop.tx_id, j + 1));
            expect_writes.push_back(
                {full, write_kind::put,
                 encode_coin({req.outputs[j].amount, req.outputs[j].owner, req.label})});
        }
        if (tx.rwset.writes != expect_writes) {
            reason = "write set does not match request";
            return false;
        }
        return true;
    };
}

std::vector<std::pair<std::string, coin_value>> coins_of(const ledger::state_snapshot& snap,
                                                         const std::string& cc_id,
                                                         const std::string& owner) {
    std::vector<std::pair<std::string, coin_value>> out;
    std::string prefix = cc_id;
    prefix.push_back('\0');
    // Separator is 0x00, so bumping it to 0x01 bounds the whole namespace.
    std::string end = cc_id;
    end.push_back('\x01');
    for (const auto& [full, entry] : snap.range(prefix, end)) {
        coin_value c;
        try {
            c = decode_coin(as_view(entry.value));
        } catch (const std::exception&) {
            continue;  // foreign value in the namespace
        }
        if (c.owner == owner) out.emplace_back(chaincode::strip_namespace(cc_id, full), c);
    }
    return out;
}

std::uint64_t balance_of(const ledger::state_snapshot& snap, const std::string& cc_id,
                         const std::string& owner, const std::string& label) {
    std::uint64_t total = 0;
    for (const auto& [key, c] : coins_of(snap, cc_id, owner)) {
        if (c.label == label) total = checked_add(total, c.amount, "balance overflow");
    }
    return total;
}

spend_plan plan_spend(const ledger::state_snapshot& snap, const std::string& cc_id,
                      const std::string& owner, const std::string& label, std::uint64_t amount) {
    spend_plan plan;
    std::uint64_t gathered = 0;
    for (const auto& [key, c] : coins_of(snap, cc_id, owner)) {
        if (c.label != label) continue;
        plan.inputs.push_back(key);
        gathered = checked_add(gathered, c.amount, "balance overflow");
        if (gathered >= amount) break;
    }
    if (gathered < amount) throw insufficient_funds("balance below requested amount");
    plan.change = gathered - amount;
    return plan;
}

}  // namespace evov::fabcoin
