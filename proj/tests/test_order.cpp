#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace evov;
using namespace evov::order;

namespace {

// Cheap txs for cutting tests: padded args steer the encoded size, no
// signatures are needed because the cutter never inspects content.
core::transaction padded_tx(sim::rng& r, std::size_t pad = 0) {
    core::transaction t;
    t.prop.client_id = "c" + std::to_string(r.below(1000));
    t.prop.operation = "op";
    t.prop.nonce = r.random_bytes(8);
    t.prop.tx_id = core::derive_txid(t.prop.client_id, as_view(t.prop.nonce));
    if (pad) t.prop.args.push_back(r.random_bytes(pad));
    return t;
}

log_entry tx_entry(core::transaction t) {
    log_entry e;
    e.k = log_entry::kind::tx;
    e.tx = std::move(t);
    return e;
}

log_entry ttc_entry(std::uint64_t seq) {
    log_entry e;
    e.k = log_entry::kind::time_to_cut;
    e.ttc.intended_seq = seq;
    return e;
}

struct rig {
    test::mini_net net = test::make_mini_net(1, 1);
    channel_config cfg;
    core::block genesis;

    explicit rig(std::uint32_t max_count = 3, std::uint64_t max_bytes = 1 << 20) {
        cfg.channel_id = "ch1";
        cfg.batch_max_count = max_count;
        cfg.batch_max_bytes = max_bytes;
        cfg.config_payload = str_bytes("setup");
        genesis = make_genesis(cfg, net.secret(net.orderer));
    }

    block_cutter cutter() { return block_cutter(cfg, &net.secret(net.orderer), core::hash_block(genesis)); }
};

}  // namespace

TEST_CASE("log entry codec round-trip") {
    sim::rng r(1);
    auto e = tx_entry(padded_tx(r, 20));
    auto dec = decode_log_entry(as_view(encode_log_entry(e)));
    CHECK(dec.k == log_entry::kind::tx);
    CHECK(dec.tx == e.tx);

    auto t = decode_log_entry(as_view(encode_log_entry(ttc_entry(7))));
    CHECK(t.k == log_entry::kind::time_to_cut);
    CHECK(t.ttc.intended_seq == 7);

    auto bad = encode_log_entry(e);
    bad[0] = 5;
    CHECK_THROWS_AS(decode_log_entry(as_view(bad)), core::codec_error);
    bad = encode_log_entry(e);
    bad.push_back(0);
    CHECK_THROWS_AS(decode_log_entry(as_view(bad)), core::codec_error);
}

TEST_CASE("genesis block carries the channel setup") {
    rig r;
    CHECK(r.genesis.header.seq == 0);
    CHECK(r.genesis.header.prev_hash == hash256{});
    REQUIRE(r.genesis.txs.size() == 1);
    CHECK(r.genesis.txs[0].type == core::tx_type::config);
    CHECK(r.genesis.txs[0].prop.args.at(0) == str_bytes("setup"));
    CHECK(verify_block_sig(r.genesis, r.net.dir.require(r.net.orderer)));

    // Same config, same orderer: byte-identical genesis (deterministic keys
    // and signatures).
    auto again = make_genesis(r.cfg, r.net.secret(r.net.orderer));
    CHECK(core::encode_bytes(again) == core::encode_bytes(r.genesis));
}

TEST_CASE("block signature covers the hashed region") {
    rig r;
    sim::rng rng(2);
    auto c = r.cutter();
    c.consume(0, tx_entry(padded_tx(rng)));
    auto blocks = c.consume(1, ttc_entry(1));
    REQUIRE(blocks.size() == 1);
    auto b = blocks[0];
    CHECK(verify_block_sig(b, r.net.dir.require(r.net.orderer)));

    auto tampered = b;
    tampered.txs[0].prop.operation = "evil";
    CHECK_FALSE(verify_block_sig(tampered, r.net.dir.require(r.net.orderer)));
    // The bitmask is attached after signing and is not covered.
    auto masked = b;
    masked.metadata_bitmask = bytes{1};
    CHECK(verify_block_sig(masked, r.net.dir.require(r.net.orderer)));
}

TEST_CASE("count-triggered cutting") {
    rig r(3);
    sim::rng rng(3);
    auto c = r.cutter();
    std::uint64_t idx = 0;
    CHECK(c.consume(idx++, tx_entry(padded_tx(rng))).empty());
    CHECK(c.consume(idx++, tx_entry(padded_tx(rng))).empty());
    auto blocks = c.consume(idx++, tx_entry(padded_tx(rng)));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].header.seq == 1);
    CHECK(blocks[0].header.prev_hash == core::hash_block(r.genesis));
    CHECK(blocks[0].txs.size() == 3);
    CHECK(c.pending_empty());

    // The chain continues from the cut block's hash.
    for (int i = 0; i < 2; ++i) c.consume(idx++, tx_entry(padded_tx(rng)));
    auto second = c.consume(idx++, tx_entry(padded_tx(rng)));
    REQUIRE(second.size() == 1);
    CHECK(second[0].header.seq == 2);
    CHECK(second[0].header.prev_hash == core::hash_block(blocks[0]));
}

TEST_CASE("byte-triggered cutting") {
    rig r(100, 1000);
    sim::rng rng(4);
    auto c = r.cutter();
    // Two ~400-byte txs fit; the third spills into a new batch.
    CHECK(c.consume(0, tx_entry(padded_tx(rng, 300))).empty());
    CHECK(c.consume(1, tx_entry(padded_tx(rng, 300))).empty());
    auto blocks = c.consume(2, tx_entry(padded_tx(rng, 300)));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].txs.size() == 2);
    CHECK_FALSE(c.pending_empty());

    // An oversized single transaction ships alone instead of wedging: the
    // current batch is cut first, then the giant goes out by itself.
    auto both = c.consume(3, tx_entry(padded_tx(rng, 2000)));
    REQUIRE(both.size() == 2);
    CHECK(both[0].txs.size() == 1);
    CHECK(both[1].txs.size() == 1);
    CHECK(both[1].txs[0].prop.args[0].size() == 2000);
    CHECK(c.pending_empty());
}

TEST_CASE("time-to-cut: first effective marker wins, stale ones are ignored") {
    rig r(10);
    sim::rng rng(5);
    auto c = r.cutter();
    std::uint64_t idx = 0;

    // TTC on an empty batch does nothing.
    CHECK(c.consume(idx++, ttc_entry(1)).empty());
    CHECK(c.consume(idx++, tx_entry(padded_tx(rng))).empty());
    auto blocks = c.consume(idx++, ttc_entry(1));
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].txs.size() == 1);

    // A duplicate marker for the already-cut block is stale on every replica.
    CHECK(c.consume(idx++, ttc_entry(1)).empty());
    // A marker for a future block is equally ignored.
    CHECK(c.consume(idx++, tx_entry(padded_tx(rng))).empty());
    CHECK(c.consume(idx++, ttc_entry(5)).empty());
    auto b2 = c.consume(idx++, ttc_entry(2));
    REQUIRE(b2.size() == 1);
    CHECK(b2[0].header.seq == 2);
}

TEST_CASE("consume rejects log gaps and replays") {
    rig r;
    sim::rng rng(6);
    auto c = r.cutter();
    c.consume(0, tx_entry(padded_tx(rng)));
    CHECK_THROWS_AS(c.consume(2, tx_entry(padded_tx(rng))), fatal_log_corruption);
    CHECK_THROWS_AS(c.consume(0, tx_entry(padded_tx(rng))), fatal_log_corruption);
    CHECK(c.consumed() == 1);
}

TEST_CASE("replicas replaying one log cut byte-identical blocks") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        rig r(8);
        sim::rng rng(seed);
        // A shared log with interleaved transactions and TTC markers, some
        // stale by construction.
        total_order_log log;
        std::uint64_t next_ttc_guess = 1;
        for (int i = 0; i < 200; ++i) {
            if (rng.chance(0.15)) {
                log.append(ttc_entry(rng.chance(0.5) ? next_ttc_guess : rng.between(1, 30)));
            } else {
                log.append(tx_entry(padded_tx(rng, rng.below(40))));
            }
            if (rng.chance(0.1)) ++next_ttc_guess;
        }

        osn a(r.cfg, &r.net.secret(r.net.orderer), r.genesis);
        osn b(r.cfg, &r.net.secret(r.net.orderer), r.genesis);
        osn c(r.cfg, &r.net.secret(r.net.orderer), r.genesis);

        for (std::uint64_t i = 0; i < log.size(); ++i) {
            auto ba = a.consume(i, log.at(i));
            auto bb = b.consume(i, log.at(i));
            auto bc = c.consume(i, log.at(i));
            REQUIRE(ba.size() == bb.size());
            REQUIRE(ba.size() == bc.size());
            for (std::size_t j = 0; j < ba.size(); ++j) {
                CHECK(core::encode_bytes(*ba[j]) == core::encode_bytes(*bb[j]));
                CHECK(core::encode_bytes(*ba[j]) == core::encode_bytes(*bc[j]));
            }
        }
        CHECK(a.chain_height() == b.chain_height());
        CHECK(a.chain_height() == c.chain_height());
        CHECK(a.chain_height() >= 10);  // the workload actually cut blocks
    }
}

TEST_CASE("osn serves its chain") {
    rig r(2);
    sim::rng rng(7);
    osn node(r.cfg, &r.net.secret(r.net.orderer), r.genesis);
    CHECK(node.chain_height() == 0);
    node.consume(0, tx_entry(padded_tx(rng)));
    node.consume(1, tx_entry(padded_tx(rng)));
    CHECK(node.chain_height() == 1);
    CHECK(node.block_at(0).header.seq == 0);
    CHECK(node.block_at(1).header.seq == 1);
    CHECK_THROWS(node.block_at(2));
}

TEST_CASE("broadcast admission") {
    test::mini_net net = test::make_mini_net(2, 1);
    channel_config cfg;
    cfg.channel_id = "ch1";
    cfg.batch_max_bytes = 500;

    sim::rng rng(8);
    auto tx = padded_tx(rng);
    tx.prop.client_id = "org1.client0";

    SUBCASE("wildcard admits any member") {
        check_broadcast(cfg, net.dir, tx, 100);
        CHECK(deliver_allowed(cfg, net.dir, "org2.peer0"));
    }
    SUBCASE("unknown identities are always refused") {
        tx.prop.client_id = "stranger";
        CHECK_THROWS_AS(check_broadcast(cfg, net.dir, tx, 100), access_denied);
        CHECK_FALSE(deliver_allowed(cfg, net.dir, "stranger"));
    }
    SUBCASE("org scoping") {
        cfg.broadcast_allow = {"org:org2"};
        CHECK_THROWS_AS(check_broadcast(cfg, net.dir, tx, 100), access_denied);
        tx.prop.client_id = "org2.client0";
        check_broadcast(cfg, net.dir, tx, 100);
        cfg.deliver_allow = {"org:org1", "osn0"};
        CHECK(deliver_allowed(cfg, net.dir, "org1.peer0"));
        CHECK_FALSE(deliver_allowed(cfg, net.dir, "org2.peer0"));
    }
    SUBCASE("explicit id") {
        cfg.broadcast_allow = {"org1.client0"};
        check_broadcast(cfg, net.dir, tx, 100);
        tx.prop.client_id = "org2.client0";
        CHECK_THROWS_AS(check_broadcast(cfg, net.dir, tx, 100), access_denied);
    }
    SUBCASE("oversized transactions are refused at the door") {
        CHECK_THROWS_AS(check_broadcast(cfg, net.dir, tx, 501), oversized_transaction);
        check_broadcast(cfg, net.dir, tx, 500);
    }
}

TEST_CASE("ordering service bootstrap and broadcast") {
    test::mini_net net = test::make_mini_net(1, 1);
    ordering_service svc(&net.dir, &net.secret(net.orderer));

    channel_config cfg;
    cfg.channel_id = "ch1";
    auto& ch = svc.bootstrap_channel(cfg);
    CHECK(ch.genesis.header.seq == 0);
    CHECK(svc.has("ch1"));
    CHECK_FALSE(svc.has("ch2"));
    CHECK_THROWS_AS(svc.bootstrap_channel(cfg), channel_exists);

    sim::rng rng(9);
    auto tx = padded_tx(rng);
    tx.prop.client_id = "org1.client0";
    CHECK(svc.broadcast("ch1", tx) == 0);
    CHECK(svc.broadcast("ch1", tx) == 1);
    CHECK(ch.log.size() == 2);
    CHECK(ch.log.at(0).tx == tx);
    CHECK_THROWS(ch.log.at(5));
    CHECK_THROWS(svc.broadcast("nope", tx));
}
