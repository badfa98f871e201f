#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "common/crypto.hpp"
#include "core/core.hpp"
#include "harness/sim.hpp"

using namespace evov;
using namespace evov::core;

namespace {

// Frozen canonical encodings, independently derived from the documented wire
// format (docs/wire.md). A mismatch means the format changed.
constexpr const char* vec_version = "07000000000000000200000000000000";
constexpr const char* vec_read_versioned = "04000000616363740103000000000000000100000000000000";
constexpr const char* vec_read_nil = "06000000616273656e7400";
constexpr const char* vec_range_read =
    "020000007231000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";
constexpr const char* vec_write_put = "020000006b310004000000deadbeef";
constexpr const char* vec_write_del = "020000006b3201";
constexpr const char* vec_rwset =
    "020000000400000061636374010300000000000000010000000000000006000000616273656e74000100000002000000"
    "7231000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f02000000020000006b3100040000"
    "00deadbeef020000006b3201";
constexpr const char* vec_proposal =
    "05000000616c69636507000000666162636f696e050000007370656e6402000000010000000102000000ffee08000000"
    "01020304050607087702f727349db3486b0ec7d98d6c902a4f427e963584990cc3e1f63c0f028d9402000000aabb";
constexpr const char* vec_endorsement =
    "7702f727349db3486b0ec7d98d6c902a4f427e963584990cc3e1f63c0f028d940a0000006f7267312e70656572300200"
    "00000400000061636374010300000000000000010000000000000006000000616273656e7400010000000200000072310"
    "00102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f02000000020000006b310004000000dead"
    "beef020000006b3201020000004f4b020000005151";
constexpr const char* vec_txid = "7702f727349db3486b0ec7d98d6c902a4f427e963584990cc3e1f63c0f028d94";
constexpr const char* vec_prev_hash =
    "84fd9bac333ad79154348296204fa7f8c537a96e08983e5f73b3f5aca8e8edf7";
constexpr const char* vec_block_hash =
    "67805481516a41209fb0dcdc9cfec1cebb4047edf8380cf21ad9dc00bd77d682";

// Shared sample values behind the vectors above.
read_write_set sample_rwset() {
    hash256 rh;
    for (std::size_t i = 0; i < 32; ++i) rh[i] = static_cast<std::uint8_t>(i);
    read_write_set rw;
    rw.reads = {{"acct", version{3, 1}}, {"absent", std::nullopt}};
    rw.range_reads = {{"r1", rh}};
    rw.writes = {{"k1", write_kind::put, from_hex("deadbeef")}, {"k2", write_kind::del, {}}};
    return rw;
}

proposal sample_proposal() {
    proposal p;
    p.client_id = "alice";
    p.chaincode_id = "fabcoin";
    p.operation = "spend";
    p.args = {from_hex("01"), from_hex("ffee")};
    p.nonce = from_hex("0102030405060708");
    p.tx_id = derive_txid("alice", as_view(p.nonce));
    p.client_sig = from_hex("aabb");
    return p;
}

transaction sample_tx() {
    transaction t;
    t.type = tx_type::normal;
    t.prop = sample_proposal();
    t.rwset = sample_rwset();
    endorsement e;
    e.tx_id = t.prop.tx_id;
    e.endorser_id = "org1.peer0";
    e.rwset = sample_rwset();
    e.response = str_bytes("OK");
    e.signature = from_hex("5151");
    t.endorsements = {e};
    return t;
}

block sample_block() {
    block b;
    b.header.seq = 1;
    b.header.prev_hash = crypto::sha256(as_view(str_bytes("prev")));
    b.txs = {sample_tx()};
    b.metadata_bitmask = from_hex("01");
    b.orderer_sig = from_hex("0ff1ce");
    return b;
}

// ---- random instance generators for the property checks

std::string random_key(sim::rng& r) {
    auto n = r.between(0, 12);
    std::string s;
    for (std::uint64_t i = 0; i < n; ++i)
        s.push_back(static_cast<char>('a' + static_cast<char>(r.below(26))));
    return s;
}

hash256 random_hash(sim::rng& r) {
    hash256 h;
    for (auto& b : h) b = static_cast<std::uint8_t>(r.below(256));
    return h;
}

read_write_set random_rwset(sim::rng& r) {
    read_write_set rw;
    auto nr = r.below(4);
    for (std::uint64_t i = 0; i < nr; ++i) {
        read_entry e{random_key(r), std::nullopt};
        if (r.chance(0.7)) e.ver = version{r.below(100), r.below(10)};
        rw.reads.push_back(std::move(e));
    }
    auto nq = r.below(3);
    for (std::uint64_t i = 0; i < nq; ++i) rw.range_reads.push_back({random_key(r), random_hash(r)});
    auto nw = r.below(4);
    for (std::uint64_t i = 0; i < nw; ++i) {
        write_entry e{random_key(r), write_kind::put, {}};
        if (r.chance(0.2)) {
            e.kind = write_kind::del;
        } else {
            e.value = r.random_bytes(r.below(20));
        }
        rw.writes.push_back(std::move(e));
    }
    return rw;
}

proposal random_proposal(sim::rng& r) {
    proposal p;
    p.client_id = "c" + random_key(r);
    p.chaincode_id = random_key(r);
    p.operation = random_key(r);
    auto na = r.below(3);
    for (std::uint64_t i = 0; i < na; ++i) p.args.push_back(r.random_bytes(r.below(16)));
    p.nonce = r.random_bytes(1 + r.below(15));
    p.tx_id = derive_txid(p.client_id, as_view(p.nonce));
    p.client_sig = r.random_bytes(r.below(70));
    return p;
}

endorsement random_endorsement(sim::rng& r) {
    endorsement e;
    e.tx_id = random_hash(r);
    e.endorser_id = "p" + random_key(r);
    e.rwset = random_rwset(r);
    e.response = r.random_bytes(r.below(10));
    e.signature = r.random_bytes(64);
    return e;
}

transaction random_tx(sim::rng& r) {
    transaction t;
    t.type = static_cast<tx_type>(r.below(3));
    t.prop = random_proposal(r);
    t.rwset = random_rwset(r);
    auto ne = r.below(3);
    for (std::uint64_t i = 0; i < ne; ++i) t.endorsements.push_back(random_endorsement(r));
    return t;
}

block random_block(sim::rng& r) {
    block b;
    b.header.seq = r.below(1000);
    b.header.prev_hash = random_hash(r);
    auto nt = r.below(4);
    for (std::uint64_t i = 0; i < nt; ++i) b.txs.push_back(random_tx(r));
    if (r.chance(0.5)) b.metadata_bitmask = r.random_bytes(r.below(4));
    b.orderer_sig = r.random_bytes(r.below(70));
    return b;
}

}  // namespace

TEST_CASE("frozen wire vectors") {
    CHECK(to_hex(as_view(encode_bytes(version{7, 2}))) == vec_version);
    auto rw = sample_rwset();
    CHECK(to_hex(as_view(encode_bytes(rw.reads[0]))) == vec_read_versioned);
    CHECK(to_hex(as_view(encode_bytes(rw.reads[1]))) == vec_read_nil);
    CHECK(to_hex(as_view(encode_bytes(rw.range_reads[0]))) == vec_range_read);
    CHECK(to_hex(as_view(encode_bytes(rw.writes[0]))) == vec_write_put);
    CHECK(to_hex(as_view(encode_bytes(rw.writes[1]))) == vec_write_del);
    CHECK(to_hex(as_view(encode_bytes(rw))) == vec_rwset);
    CHECK(to_hex(as_view(encode_bytes(sample_proposal()))) == vec_proposal);
    CHECK(to_hex(as_view(encode_bytes(sample_tx().endorsements[0]))) == vec_endorsement);
    auto b = sample_block();
    CHECK(to_hex(b.header.prev_hash) == vec_prev_hash);
    CHECK(to_hex(hash_block(b)) == vec_block_hash);
    CHECK(to_hex(sample_proposal().tx_id) == vec_txid);
}

TEST_CASE("txid derivation") {
    // Independent recomputation: H(u32 len || client_id || nonce).
    bytes nonce = from_hex("0102030405060708");
    bytes manual = {5, 0, 0, 0, 'a', 'l', 'i', 'c', 'e'};
    manual.insert(manual.end(), nonce.begin(), nonce.end());
    CHECK(derive_txid("alice", as_view(nonce)) == crypto::sha256(as_view(manual)));

    CHECK_THROWS_AS(derive_txid("alice", byte_view{}), invalid_nonce);

    // Distinct (client, nonce) pairs collide only if sha256 does.
    sim::rng r(7);
    std::set<hash256> seen;
    for (int i = 0; i < 100000; ++i) {
        auto id = "c" + std::to_string(r.below(1000));
        auto txid = derive_txid(id, as_view(r.random_bytes(8)));
        seen.insert(txid);
    }
    CHECK(seen.size() > 99990);  // allows only astronomically unlikely repeats of (id, nonce)

    // Same inputs, same txid; concatenation cannot be confused across the
    // length prefix: ("ab", "c") vs ("a", "bc") differ.
    CHECK(derive_txid("ab", as_view(str_bytes("c"))) != derive_txid("a", as_view(str_bytes("bc"))));
}

TEST_CASE("round-trip property") {
    sim::rng r(1234);
    for (int i = 0; i < 4000; ++i) {
        auto rw = random_rwset(r);
        auto enc = encode_bytes(rw);
        wire_reader rd(as_view(enc));
        CHECK(decode_read_write_set(rd) == rw);
        CHECK(rd.done());
    }
    for (int i = 0; i < 3000; ++i) {
        auto p = random_proposal(r);
        auto enc = encode_bytes(p);
        wire_reader rd(as_view(enc));
        CHECK(decode_proposal(rd) == p);
        CHECK(rd.done());
    }
    for (int i = 0; i < 2000; ++i) {
        auto t = random_tx(r);
        CHECK(decode_transaction_bytes(as_view(encode_bytes(t))) == t);
    }
    for (int i = 0; i < 1000; ++i) {
        auto b = random_block(r);
        CHECK(decode_block_bytes(as_view(encode_bytes(b))) == b);
    }
}

TEST_CASE("encoding is injective") {
    sim::rng r(99);
    for (int i = 0; i < 5000; ++i) {
        auto a = random_tx(r);
        auto b = random_tx(r);
        if (!(a == b)) CHECK(encode_bytes(a) != encode_bytes(b));
    }
    for (int i = 0; i < 5000; ++i) {
        auto a = random_block(r);
        auto b = a;
        // Single targeted mutation; the encoding must move with it.
        switch (r.below(4)) {
            case 0: b.header.seq ^= 1; break;
            case 1: b.header.prev_hash[0] ^= 1; break;
            case 2: b.orderer_sig.push_back(0); break;
            default:
                if (b.metadata_bitmask) {
                    b.metadata_bitmask.reset();
                } else {
                    b.metadata_bitmask = bytes{1};
                }
        }
        CHECK(encode_bytes(a) != encode_bytes(b));
    }
}

TEST_CASE("single-byte corruption never decodes to the original") {
    sim::rng r(5);
    for (int iter = 0; iter < 200; ++iter) {
        auto b = random_block(r);
        auto enc = encode_bytes(b);
        if (enc.empty()) continue;
        for (int flip = 0; flip < 20; ++flip) {
            auto pos = r.below(enc.size());
            auto mutated = enc;
            mutated[pos] ^= static_cast<std::uint8_t>(1u << r.below(8));
            try {
                auto dec = decode_block_bytes(as_view(mutated));
                CHECK(!(dec == b));
            } catch (const codec_error&) {
                // rejection is detection
            }
        }
    }
}

TEST_CASE("block hash covers header and transactions only") {
    auto b = sample_block();
    auto h = hash_block(b);

    auto b2 = b;
    b2.metadata_bitmask = from_hex("00");
    b2.orderer_sig = from_hex("ffff");
    CHECK(hash_block(b2) == h);  // metadata excluded

    auto b3 = b;
    b3.header.seq = 2;
    CHECK(hash_block(b3) != h);
    auto b4 = b;
    b4.txs[0].prop.operation = "mint";
    CHECK(hash_block(b4) != h);
    auto b5 = b;
    b5.header.prev_hash[31] ^= 1;
    CHECK(hash_block(b5) != h);

    // The hash region is the encoding prefix shared by both variants.
    auto region = block_hash_region(b);
    CHECK(region == block_hash_region(b2));
    CHECK(crypto::sha256(as_view(region)) == h);
}

TEST_CASE("sign-bytes builders") {
    auto p = sample_proposal();
    auto unsigned_enc = proposal_sign_bytes(p);
    auto p2 = p;
    p2.client_sig.clear();
    CHECK(unsigned_enc == encode_bytes(p2));
    // Signature itself is excluded, everything else is covered.
    auto p3 = p;
    p3.client_sig = from_hex("00");
    CHECK(proposal_sign_bytes(p3) == unsigned_enc);
    auto p4 = p;
    p4.operation = "mint";
    CHECK(proposal_sign_bytes(p4) != unsigned_enc);

    auto rw = sample_rwset();
    auto sb = endorsement_sign_bytes(p.tx_id, rw, as_view(str_bytes("OK")));
    auto rw2 = rw;
    rw2.writes[0].value = from_hex("beefdead");
    CHECK(endorsement_sign_bytes(p.tx_id, rw2, as_view(str_bytes("OK"))) != sb);
}

TEST_CASE("reader rejects malformed input") {
    // Truncation at every prefix length must throw, never read past the end.
    auto enc = encode_bytes(sample_tx());
    for (std::size_t cut = 0; cut < enc.size(); ++cut) {
        byte_view prefix(enc.data(), cut);
        CHECK_THROWS_AS(decode_transaction_bytes(prefix), codec_error);
    }

    // Trailing garbage is rejected by the standalone decoders.
    auto extra = enc;
    extra.push_back(0);
    CHECK_THROWS_AS(decode_transaction_bytes(as_view(extra)), codec_error);

    // Bad enum / flag values.
    bytes bad_type = enc;
    bad_type[0] = 9;
    CHECK_THROWS_AS(decode_transaction_bytes(as_view(bad_type)), codec_error);

    wire_reader r1(as_view(from_hex("01000000ff")));  // read_entry version flag > 1
    bytes bad_flag = encode_bytes(read_entry{"k", std::nullopt});
    bad_flag.back() = 2;
    wire_reader r2(as_view(bad_flag));
    CHECK_THROWS_AS(decode_read_entry(r2), codec_error);

    bytes bad_kind = encode_bytes(write_entry{"k", write_kind::del, {}});
    bad_kind.back() = 3;
    wire_reader r3(as_view(bad_kind));
    CHECK_THROWS_AS(decode_write_entry(r3), codec_error);

    // Length prefix claiming more data than present.
    CHECK_THROWS_AS(decode_block_bytes(as_view(from_hex("ffffffff"))), codec_error);
}

TEST_CASE("bitmask pack and get") {
    std::vector<bool> bits{true, false, false, true, true, false, true, true, true, false, true};
    auto mask = bitmask_pack(bits);
    CHECK(mask.size() == 2);
    for (std::size_t i = 0; i < bits.size(); ++i) CHECK(bitmask_get(mask, i) == bits[i]);
    CHECK_FALSE(bitmask_get(mask, 100));  // out of range reads as invalid
    CHECK(bitmask_pack({}).empty());

    sim::rng r(3);
    for (int iter = 0; iter < 500; ++iter) {
        std::vector<bool> v;
        auto n = r.below(40);
        for (std::uint64_t i = 0; i < n; ++i) v.push_back(r.chance(0.5));
        auto m = bitmask_pack(v);
        CHECK(m.size() == (v.size() + 7) / 8);
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(bitmask_get(m, i) == v[i]);
    }
}

TEST_CASE("version ordering") {
    CHECK(compare_versions({1, 5}, {2, 0}) == std::strong_ordering::less);
    CHECK(compare_versions({2, 0}, {2, 1}) == std::strong_ordering::less);
    CHECK(compare_versions({2, 1}, {2, 1}) == std::strong_ordering::equal);
    CHECK(compare_versions({3, 0}, {2, 9}) == std::strong_ordering::greater);
}

TEST_CASE("encoded size matches encoding") {
    sim::rng r(17);
    for (int i = 0; i < 200; ++i) {
        auto t = random_tx(r);
        CHECK(encoded_size(t) == encode_bytes(t).size());
    }
}
