#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "gossip/gossip.hpp"
#include "harness/sim.hpp"

using namespace evov;
using namespace evov::gossip;

namespace {

core::block blk(std::uint64_t seq) {
    core::block b;
    b.header.seq = seq;
    return b;
}

std::vector<std::uint64_t> seqs(const std::vector<core::block>& v) {
    std::vector<std::uint64_t> out;
    for (const auto& b : v) out.push_back(b.header.seq);
    return out;
}

}  // namespace

TEST_CASE("membership: fresh heartbeats advance the view, stale ones do not") {
    membership_view v("p0");
    CHECK(v.integrate({"p1", 1}, 100));
    CHECK(v.heartbeat("p1") == 1);
    // Same heartbeat again: no advance, no refreshed liveness.
    CHECK_FALSE(v.integrate({"p1", 1}, 200));
    CHECK_FALSE(v.integrate({"p1", 0}, 300));
    CHECK(v.integrate({"p1", 5}, 400));
    CHECK(v.heartbeat("p1") == 5);
    CHECK(v.heartbeat("unknown") == 0);
}

TEST_CASE("membership: liveness timeout") {
    membership_view v("p0");
    v.integrate({"p1", 1}, 1000);
    CHECK(v.is_alive("p1", 1000, 500));
    CHECK(v.is_alive("p1", 1500, 500));
    CHECK_FALSE(v.is_alive("p1", 1501, 500));
    // Self is always alive; never-heard peers never are.
    CHECK(v.is_alive("p0", 999999, 1));
    CHECK_FALSE(v.is_alive("p9", 0, 1000000));

    v.integrate({"p2", 1}, 1400);
    auto alive = v.alive_peers(1500, 500);
    CHECK(alive == std::vector<std::string>{"p1", "p2"});
    alive = v.alive_peers(1800, 500);
    CHECK(alive == std::vector<std::string>{"p2"});
    // The self entry is excluded even after observe_self.
    v.observe_self(1800);
    CHECK(v.alive_peers(1800, 500) == std::vector<std::string>{"p2"});
}

TEST_CASE("membership: observe_self keeps the heartbeat monotone") {
    membership_view v("p0");
    v.observe_self(10);
    v.observe_self(20);
    v.observe_self(30);
    CHECK(v.heartbeat("p0") == 3);
    // A reflected copy of our own old heartbeat cannot roll it back.
    CHECK_FALSE(v.integrate({"p0", 2}, 40));
    CHECK(v.heartbeat("p0") == 3);
}

TEST_CASE("block buffer: in-order delivery") {
    block_buffer buf(1);
    CHECK(seqs(buf.insert(blk(1))) == std::vector<std::uint64_t>{1});
    CHECK(seqs(buf.insert(blk(2))) == std::vector<std::uint64_t>{2});
    CHECK(buf.next_expected() == 3);
    CHECK(buf.held_count() == 0);
}

TEST_CASE("block buffer: out-of-order arrivals release a contiguous run") {
    block_buffer buf(1);
    CHECK(buf.insert(blk(3)).empty());
    CHECK(buf.insert(blk(2)).empty());
    CHECK(buf.holds(3));
    CHECK(buf.holds(2));
    CHECK(buf.missing() == std::vector<std::uint64_t>{1});
    auto released = buf.insert(blk(1));
    CHECK(seqs(released) == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(buf.next_expected() == 4);
    CHECK(buf.held_count() == 0);
}

TEST_CASE("block buffer: duplicates and already-delivered blocks are dropped") {
    block_buffer buf(1);
    buf.insert(blk(1));
    CHECK(buf.insert(blk(1)).empty());
    CHECK(buf.insert(blk(0)).empty());
    buf.insert(blk(3));
    CHECK(buf.insert(blk(3)).empty());
    CHECK(buf.held_count() == 1);
    // Delivery of 2 flushes 3 and purges any stale holdings below the watermark.
    CHECK(seqs(buf.insert(blk(2))) == std::vector<std::uint64_t>{2, 3});
    CHECK(buf.held_count() == 0);
}

TEST_CASE("block buffer: missing reports the gaps below the highest held") {
    block_buffer buf(1);
    CHECK(buf.missing().empty());
    buf.insert(blk(5));
    buf.insert(blk(3));
    CHECK(buf.missing() == std::vector<std::uint64_t>{1, 2, 4});
    buf.insert(blk(1));
    CHECK(buf.missing() == std::vector<std::uint64_t>{2, 4});
}

TEST_CASE("block buffer: capacity bounds the held set") {
    block_buffer buf(1, 2);
    buf.insert(blk(10));
    buf.insert(blk(11));
    buf.insert(blk(12));  // over capacity, dropped
    CHECK(buf.held_count() == 2);
    CHECK(buf.holds(10));
    CHECK(buf.holds(11));
    CHECK_FALSE(buf.holds(12));
}

TEST_CASE("block buffer: custom starting watermark") {
    block_buffer buf(7);
    CHECK(buf.insert(blk(3)).empty());   // below watermark
    CHECK(buf.next_expected() == 7);
    CHECK(seqs(buf.insert(blk(7))) == std::vector<std::uint64_t>{7});
}

TEST_CASE("leader election is the smallest alive id") {
    CHECK_FALSE(elect_leader({}).has_value());
    CHECK(elect_leader({"org1.peer2"}) == "org1.peer2");
    CHECK(elect_leader({"org1.peer2", "org1.peer0", "org1.peer1"}) == "org1.peer0");
}

TEST_CASE("fanout selection draws without replacement") {
    std::vector<std::string> cands{"a", "b", "c", "d", "e"};

    // Deterministic in the draw sequence.
    sim::rng r1(9), r2(9);
    auto pick1 = pick_fanout(cands, 3, [&](std::size_t n) { return r1.below(n); });
    auto pick2 = pick_fanout(cands, 3, [&](std::size_t n) { return r2.below(n); });
    CHECK(pick1 == pick2);
    CHECK(pick1.size() == 3);

    // No duplicates ever; fanout larger than the pool returns everyone.
    sim::rng r3(77);
    for (int i = 0; i < 200; ++i) {
        auto picked = pick_fanout(cands, 3, [&](std::size_t n) { return r3.below(n); });
        std::set<std::string> uniq(picked.begin(), picked.end());
        CHECK(uniq.size() == picked.size());
    }
    auto all = pick_fanout(cands, 10, [&](std::size_t n) { return r3.below(n); });
    CHECK(all.size() == 5);

    // Every candidate is reachable across draws.
    std::set<std::string> seen;
    sim::rng r4(5);
    for (int i = 0; i < 300; ++i) {
        for (auto& id : pick_fanout(cands, 1, [&](std::size_t n) { return r4.below(n); })) seen.insert(id);
    }
    CHECK(seen.size() == 5);
}
