// Shared builders for the test suites: a small identity roster, a generic
// key-value chaincode, and endorsement/block assembly shortcuts.
#pragma once

#include <charconv>
#include <map>
#include <string>
#include <vector>

#include "chaincode/chaincode.hpp"
#include "endorse/endorse.hpp"
#include "harness/scenario.hpp"
#include "harness/sim.hpp"
#include "msp/msp.hpp"
#include "order/order.hpp"
#include "validate/validate.hpp"

namespace evov::test {

// Identities for a hand-driven deployment: org<i>.peer<j>, org<i>.client<j>,
// cb<i>, and one orderer, all with deterministic keys.
struct mini_net {
    msp::msp_directory dir;
    std::map<std::string, msp::signing_identity> secrets;
    std::vector<std::string> peers;
    std::vector<std::string> clients;
    std::vector<std::string> cbs;
    std::vector<std::string> orgs;
    std::string orderer;
    std::map<std::string, endorse::nonce_cache> nonces;

    const msp::signing_identity& secret(const std::string& id) const { return secrets.at(id); }
};

inline mini_net make_mini_net(unsigned orgs, unsigned peers_per_org, unsigned clients_per_org = 1,
                              unsigned cbs = 1, std::uint64_t seed = 42) {
    mini_net n;
    auto gen = [&](const std::string& id, const std::string& org, msp::role r) {
        n.secrets[id] = n.dir.generate(id, org, r, harness::identity_key_seed(seed, id));
    };
    for (unsigned o = 0; o < orgs; ++o) {
        std::string org = "org" + std::to_string(o + 1);
        n.orgs.push_back(org);
        for (unsigned p = 0; p < peers_per_org; ++p) {
            std::string id = org + ".peer" + std::to_string(p);
            gen(id, org, msp::role::peer);
            n.peers.push_back(id);
        }
        for (unsigned c = 0; c < clients_per_org; ++c) {
            std::string id = org + ".client" + std::to_string(c);
            gen(id, org, msp::role::client);
            n.clients.push_back(id);
        }
    }
    for (unsigned c = 0; c < cbs; ++c) {
        std::string id = "cb" + std::to_string(c);
        gen(id, "bank", msp::role::client);
        n.cbs.push_back(id);
    }
    n.orderer = "osn0";
    gen(n.orderer, "orderers", msp::role::orderer);
    return n;
}

inline std::uint64_t parse_u64(const bytes& b) {
    std::uint64_t v = 0;
    auto s = bytes_str(as_view(b));
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

inline bytes u64_bytes(std::uint64_t v) { return str_bytes(std::to_string(v)); }

// Generic state-machine chaincode used across the suites:
//   put k v | del k | get k | incr k delta | copy src dst |
//   range_count start end (writes "count:<start>" = #entries seen)
inline chaincode::chaincode_definition make_kv_chaincode(std::string id, std::string policy) {
    chaincode::chaincode_definition def;
    def.id = std::move(id);
    def.policy = std::move(policy);
    def.handler = [](chaincode::sim_context& ctx) {
        const auto& op = ctx.operation();
        const auto& a = ctx.args();
        auto arg = [&](std::size_t i) { return bytes_str(as_view(a.at(i))); };
        if (op == "put") {
            ctx.put_state(arg(0), a.at(1));
        } else if (op == "del") {
            ctx.del_state(arg(0));
        } else if (op == "get") {
            auto v = ctx.get_state(arg(0));
            ctx.set_response(v.value_or(bytes{}));
        } else if (op == "incr") {
            auto cur = ctx.get_state(arg(0));
            std::uint64_t v = cur ? parse_u64(*cur) : 0;
            ctx.put_state(arg(0), u64_bytes(v + parse_u64(a.at(1))));
            ctx.set_response(u64_bytes(v));
        } else if (op == "copy") {
            auto v = ctx.get_state(arg(0));
            if (!v) throw chaincode::simulation_failed("copy: missing " + arg(0));
            ctx.put_state(arg(1), *v);
        } else if (op == "range_count") {
            auto entries = ctx.get_state_range(arg(0), arg(1));
            ctx.put_state("count:" + arg(0), u64_bytes(entries.size()));
            ctx.set_response(u64_bytes(entries.size()));
        } else {
            throw chaincode::simulation_failed("unknown op: " + op);
        }
    };
    return def;
}

// Proposal -> endorsements at `endorsers` against `snap` -> assembled tx.
inline core::transaction endorsed_tx(mini_net& n, const chaincode::chaincode_registry& reg,
                                     const std::string& channel, const std::string& cc_id,
                                     const std::string& client, const std::string& op,
                                     std::vector<bytes> args, bytes nonce,
                                     const std::vector<std::string>& endorsers,
                                     const ledger::state_snapshot& snap) {
    auto prop = endorse::build_proposal(n.secret(client), cc_id, op, std::move(args), std::move(nonce));
    std::vector<endorse::proposal_response> resps;
    for (const auto& pid : endorsers) {
        endorse::endorser_context ectx;
        ectx.msp = &n.dir;
        ectx.registry = &reg;
        ectx.channel = channel;
        ectx.self = &n.secret(pid);
        ectx.nonces = &n.nonces[pid];
        resps.push_back(endorse::endorse_proposal(ectx, prop, snap));
    }
    auto policy = endorse::parse_policy(reg.require(channel, cc_id).policy);
    return endorse::collect_and_assemble(prop, resps, policy, n.dir);
}

inline core::block make_signed_block(std::uint64_t seq, const hash256& prev,
                                     std::vector<core::transaction> txs,
                                     const msp::signing_identity& orderer) {
    core::block b;
    b.header.seq = seq;
    b.header.prev_hash = prev;
    b.txs = std::move(txs);
    b.orderer_sig = order::sign_block(b, orderer);
    return b;
}

inline bytes fresh_nonce(sim::rng& r) { return r.random_bytes(16); }

}  // namespace evov::test
