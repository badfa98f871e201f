#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace evov;
using namespace evov::endorse;

namespace {

struct rig {
    test::mini_net net = test::make_mini_net(2, 2);
    chaincode::chaincode_registry reg;
    ledger::state_snapshot snap;

    explicit rig(const std::string& policy = "OR(org:org1, org:org2)") {
        reg.install("ch1", test::make_kv_chaincode("kv", policy));
    }

    endorser_context ctx_for(const std::string& peer) {
        endorser_context c;
        c.msp = &net.dir;
        c.registry = &reg;
        c.channel = "ch1";
        c.self = &net.secret(peer);
        c.nonces = &net.nonces[peer];
        return c;
    }

    core::proposal prop(const std::string& client, bytes nonce,
                        const std::string& op = "put",
                        std::vector<bytes> args = {str_bytes("k"), str_bytes("v")}) {
        return build_proposal(net.secret(client), "kv", op, std::move(args), std::move(nonce));
    }
};

}  // namespace

TEST_CASE("nonce cache replay filter") {
    nonce_cache c(3);
    CHECK_FALSE(c.seen_or_insert("a", {1}));
    CHECK(c.seen_or_insert("a", {1}));
    CHECK_FALSE(c.seen_or_insert("b", {1}));  // per-client scoping
    CHECK_FALSE(c.seen_or_insert("a", {2}));
    CHECK_FALSE(c.seen_or_insert("a", {3}));
    CHECK(c.size("a") == 3);

    // Capacity evicts the oldest nonce, which then reads as fresh again.
    CHECK_FALSE(c.seen_or_insert("a", {4}));
    CHECK(c.size("a") == 3);
    CHECK_FALSE(c.seen_or_insert("a", {1}));
    CHECK(c.seen_or_insert("a", {4}));
    CHECK(c.size("ghost") == 0);
}

TEST_CASE("build_proposal signs and derives the txid") {
    rig r;
    auto p = r.prop("org1.client0", {9, 9, 9});
    CHECK(p.tx_id == core::derive_txid("org1.client0", as_view(p.nonce)));
    CHECK(msp::verify(r.net.dir, p.client_id, as_view(core::proposal_sign_bytes(p)),
                      as_view(p.client_sig)));
    CHECK_THROWS_AS(r.prop("org1.client0", {}), core::invalid_nonce);
}

TEST_CASE("endorse_proposal happy path") {
    rig r;
    auto p = r.prop("org1.client0", {1});
    auto ctx = r.ctx_for("org1.peer0");
    auto resp = endorse_proposal(ctx, p, r.snap);

    CHECK(resp.status == response_status::ok);
    CHECK(resp.peer_id == "org1.peer0");
    CHECK(resp.endo.tx_id == p.tx_id);
    CHECK(resp.endo.endorser_id == "org1.peer0");
    REQUIRE(resp.endo.rwset.writes.size() == 1);
    // The endorsement signature binds (txid, rwset, response).
    auto msg = core::endorsement_sign_bytes(resp.endo.tx_id, resp.endo.rwset,
                                            as_view(resp.endo.response));
    CHECK(msp::verify(r.net.dir, "org1.peer0", as_view(msg), as_view(resp.endo.signature)));
}

TEST_CASE("endorse_proposal rejects tampering and replays") {
    rig r;
    auto ctx = r.ctx_for("org1.peer0");

    // Forged client signature.
    auto p1 = r.prop("org1.client0", {1});
    p1.client_sig[5] ^= 1;
    CHECK_THROWS_AS(endorse_proposal(ctx, p1, r.snap), bad_client_signature);

    // Mutated-after-signing operation.
    auto p2 = r.prop("org1.client0", {2});
    p2.operation = "del";
    CHECK_THROWS_AS(endorse_proposal(ctx, p2, r.snap), bad_client_signature);

    // txid not derived from (client, nonce).
    auto p3 = r.prop("org1.client0", {3});
    p3.tx_id[0] ^= 1;
    CHECK_THROWS_AS(endorse_proposal(ctx, p3, r.snap), bad_client_signature);

    // Unknown client.
    auto p4 = r.prop("org1.client0", {4});
    p4.client_id = "ghost";
    CHECK_THROWS_AS(endorse_proposal(ctx, p4, r.snap), msp::unknown_identity);

    // A client impersonating a peer: role gate.
    auto cctx = r.ctx_for("org1.client0");
    auto p5 = r.prop("org1.client0", {5});
    CHECK_THROWS_AS(endorse_proposal(cctx, p5, r.snap), not_an_endorser);

    // Nonce replay at the same peer; a different peer still endorses.
    auto p6 = r.prop("org1.client0", {6});
    CHECK(endorse_proposal(ctx, p6, r.snap).status == response_status::ok);
    CHECK_THROWS_AS(endorse_proposal(ctx, p6, r.snap), nonce_replayed);
    auto other = r.ctx_for("org1.peer1");
    CHECK(endorse_proposal(other, p6, r.snap).status == response_status::ok);

    // Simulation failure propagates.
    auto p7 = r.prop("org1.client0", {7}, "explode", {});
    CHECK_THROWS_AS(endorse_proposal(ctx, p7, r.snap), chaincode::simulation_failed);
}

TEST_CASE("peers outside the policy refuse to endorse") {
    rig r("org:org1");
    auto p = r.prop("org1.client0", {1});
    CHECK(endorse_proposal(r.ctx_for("org1.peer0"), p, r.snap).status == response_status::ok);
    CHECK_THROWS_AS(endorse_proposal(r.ctx_for("org2.peer0"), p, r.snap), not_an_endorser);

    // An id-leaf policy admits exactly that peer.
    rig r2("id:org2.peer1");
    auto q = r2.prop("org1.client0", {1});
    CHECK_THROWS_AS(endorse_proposal(r2.ctx_for("org2.peer0"), q, r2.snap), not_an_endorser);
    CHECK(endorse_proposal(r2.ctx_for("org2.peer1"), q, r2.snap).status == response_status::ok);
}

TEST_CASE("assembly groups identical rwsets and checks the policy") {
    rig r("AND(org:org1, org:org2)");
    auto p = r.prop("org1.client0", {1});
    std::vector<proposal_response> resps;
    for (const auto& peer : {"org1.peer0", "org2.peer0"})
        resps.push_back(endorse_proposal(r.ctx_for(peer), p, r.snap));

    auto policy = parse_policy("AND(org:org1, org:org2)");
    auto tx = collect_and_assemble(p, resps, policy, r.net.dir);
    CHECK(tx.type == core::tx_type::normal);
    CHECK(tx.prop == p);
    CHECK(tx.rwset == resps[0].endo.rwset);
    REQUIRE(tx.endorsements.size() == 2);
    // Endorsements are ordered by endorser id for deterministic tx bytes.
    CHECK(tx.endorsements[0].endorser_id == "org1.peer0");
    CHECK(tx.endorsements[1].endorser_id == "org2.peer0");

    // One org alone fails the AND policy.
    std::vector<proposal_response> half{resps[0]};
    CHECK_THROWS_AS(collect_and_assemble(p, half, policy, r.net.dir), policy_unsatisfied);
}

TEST_CASE("assembly drops divergent and failed responses") {
    rig r;
    auto p = r.prop("org1.client0", {1});
    auto good1 = endorse_proposal(r.ctx_for("org1.peer0"), p, r.snap);
    auto good2 = endorse_proposal(r.ctx_for("org1.peer1"), p, r.snap);

    // A diverging endorser: same txid, different rwset.
    auto rogue = endorse_proposal(r.ctx_for("org2.peer0"), p, r.snap);
    rogue.endo.rwset.writes[0].value = str_bytes("poison");

    proposal_response failed;
    failed.status = response_status::failed;
    failed.peer_id = "org2.peer1";
    failed.message = "simulation failed";

    proposal_response foreign = good1;
    foreign.endo.tx_id[0] ^= 1;  // response for some other proposal

    auto policy = parse_policy("OR(org:org1, org:org2)");
    auto tx = collect_and_assemble(p, {rogue, good1, failed, good2, foreign}, policy, r.net.dir);
    // Majority group wins: the two agreeing endorsements.
    REQUIRE(tx.endorsements.size() == 2);
    CHECK(tx.endorsements[0].endorser_id == "org1.peer0");
    CHECK(tx.endorsements[1].endorser_id == "org1.peer1");
    CHECK(tx.rwset == good1.endo.rwset);

    // All failed: nothing to assemble.
    CHECK_THROWS_AS(collect_and_assemble(p, {failed}, policy, r.net.dir), policy_unsatisfied);
    CHECK_THROWS_AS(collect_and_assemble(p, {}, policy, r.net.dir), policy_unsatisfied);
}

TEST_CASE("assembly tie-break is the smaller rwset hash") {
    rig r;
    auto p = r.prop("org1.client0", {1});
    auto a = endorse_proposal(r.ctx_for("org1.peer0"), p, r.snap);
    auto b = endorse_proposal(r.ctx_for("org1.peer1"), p, r.snap);
    // Force a 1 vs 1 split.
    b.endo.rwset.writes[0].value = str_bytes("other");

    auto ha = crypto::sha256(as_view(core::encode_bytes(a.endo.rwset)));
    auto hb = crypto::sha256(as_view(core::encode_bytes(b.endo.rwset)));
    auto policy = parse_policy("OR(org:org1, org:org2)");
    auto tx = collect_and_assemble(p, {a, b}, policy, r.net.dir);
    auto hw = crypto::sha256(as_view(core::encode_bytes(tx.rwset)));
    CHECK(hw == std::min(ha, hb));

    // Duplicate endorsements from one peer count once.
    auto tx2 = collect_and_assemble(p, {a, a, a}, policy, r.net.dir);
    CHECK(tx2.endorsements.size() == 1);
}
