#include "core/codec.hpp"

namespace evov::core {

namespace {
constexpr std::size_t max_wire_field = 1u << 30;

template <typename T, typename Fn>
std::vector<T> decode_list(wire_reader& r, Fn fn) {
    std::uint32_t n = r.u32();
    if (n > max_wire_field) throw codec_error("wire: list too large");
    std::vector<T> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(fn(r));
    return out;
}
}  // namespace

void wire_writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void wire_writer::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void wire_writer::blob(byte_view data) {
    if (data.size() > max_wire_field) throw codec_error("wire: blob too large");
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
}

void wire_writer::str(std::string_view s) {
    blob(byte_view(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

byte_view wire_reader::need(std::size_t n) {
    if (data_.size() - pos_ < n) throw codec_error("wire: truncated input");
    byte_view out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t wire_reader::u8() { return need(1)[0]; }

std::uint32_t wire_reader::u32() {
    auto b = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t wire_reader::u64() {
    auto b = need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

bytes wire_reader::blob() {
    std::uint32_t n = u32();
    if (n > max_wire_field) throw codec_error("wire: blob too large");
    auto b = need(n);
    return bytes(b.begin(), b.end());
}

std::string wire_reader::str() {
    bytes b = blob();
    return std::string(b.begin(), b.end());
}

hash256 wire_reader::hash() {
    auto b = need(32);
    hash256 h;
    std::copy(b.begin(), b.end(), h.begin());
    return h;
}

void wire_reader::expect_end() const {
    if (!done()) throw codec_error("wire: trailing bytes");
}

void encode(wire_writer& w, const version& v) {
    w.u64(v.block_num);
    w.u64(v.tx_num);
}

version decode_version(wire_reader& r) {
    version v;
    v.block_num = r.u64();
    v.tx_num = r.u64();
    return v;
}

void encode(wire_writer& w, const read_entry& e) {
    w.str(e.key);
    w.u8(e.ver ? 1 : 0);
    if (e.ver) encode(w, *e.ver);
}

read_entry decode_read_entry(wire_reader& r) {
    read_entry e;
    e.key = r.str();
    std::uint8_t have = r.u8();
    if (have > 1) throw codec_error("wire: bad read_entry flag");
    if (have) e.ver = decode_version(r);
    return e;
}

void encode(wire_writer& w, const range_read& rr) {
    w.str(rr.query);
    w.hash(rr.result_hash);
}

range_read decode_range_read(wire_reader& r) {
    range_read rr;
    rr.query = r.str();
    rr.result_hash = r.hash();
    return rr;
}

void encode(wire_writer& w, const write_entry& e) {
    w.str(e.key);
    w.u8(static_cast<std::uint8_t>(e.kind));
    if (e.kind == write_kind::put) w.blob(as_view(e.value));
}

write_entry decode_write_entry(wire_reader& r) {
    write_entry e;
    e.key = r.str();
    std::uint8_t k = r.u8();
    if (k > 1) throw codec_error("wire: bad write kind");
    e.kind = static_cast<write_kind>(k);
    if (e.kind == write_kind::put) e.value = r.blob();
    return e;
}

void encode(wire_writer& w, const read_write_set& rw) {
    w.u32(static_cast<std::uint32_t>(rw.reads.size()));
    for (const auto& e : rw.reads) encode(w, e);
    w.u32(static_cast<std::uint32_t>(rw.range_reads.size()));
    for (const auto& e : rw.range_reads) encode(w, e);
    w.u32(static_cast<std::uint32_t>(rw.writes.size()));
    for (const auto& e : rw.writes) encode(w, e);
}

read_write_set decode_read_write_set(wire_reader& r) {
    read_write_set rw;
    rw.reads = decode_list<read_entry>(r, decode_read_entry);
    rw.range_reads = decode_list<range_read>(r, decode_range_read);
    rw.writes = decode_list<write_entry>(r, decode_write_entry);
    return rw;
}

void encode(wire_writer& w, const proposal& p) {
    w.str(p.client_id);
    w.str(p.chaincode_id);
    w.str(p.operation);
    w.u32(static_cast<std::uint32_t>(p.args.size()));
    for (const auto& a : p.args) w.blob(as_view(a));
    w.blob(as_view(p.nonce));
    w.hash(p.tx_id);
    w.blob(as_view(p.client_sig));
}

proposal decode_proposal(wire_reader& r) {
    proposal p;
    p.client_id = r.str();
    p.chaincode_id = r.str();
    p.operation = r.str();
    p.args = decode_list<bytes>(r, [](wire_reader& rr) { return rr.blob(); });
    p.nonce = r.blob();
    p.tx_id = r.hash();
    p.client_sig = r.blob();
    return p;
}

void encode(wire_writer& w, const endorsement& e) {
    w.hash(e.tx_id);
    w.str(e.endorser_id);
    encode(w, e.rwset);
    w.blob(as_view(e.response));
    w.blob(as_view(e.signature));
}

endorsement decode_endorsement(wire_reader& r) {
    endorsement e;
    e.tx_id = r.hash();
    e.endorser_id = r.str();
    e.rwset = decode_read_write_set(r);
    e.response = r.blob();
    e.signature = r.blob();
    return e;
}

void encode(wire_writer& w, const transaction& t) {
    w.u8(static_cast<std::uint8_t>(t.type));
    encode(w, t.prop);
    encode(w, t.rwset);
    w.u32(static_cast<std::uint32_t>(t.endorsements.size()));
    for (const auto& e : t.endorsements) encode(w, e);
}

transaction decode_transaction(wire_reader& r) {
    transaction t;
    std::uint8_t ty = r.u8();
    if (ty > 2) throw codec_error("wire: bad tx type");
    t.type = static_cast<tx_type>(ty);
    t.prop = decode_proposal(r);
    t.rwset = decode_read_write_set(r);
    t.endorsements = decode_list<endorsement>(r, decode_endorsement);
    return t;
}

void encode(wire_writer& w, const block_header& h) {
    w.u64(h.seq);
    w.hash(h.prev_hash);
}

block_header decode_block_header(wire_reader& r) {
    block_header h;
    h.seq = r.u64();
    h.prev_hash = r.hash();
    return h;
}

void encode(wire_writer& w, const block& b) {
    encode(w, b.header);
    w.u32(static_cast<std::uint32_t>(b.txs.size()));
    for (const auto& t : b.txs) encode(w, t);
    w.u8(b.metadata_bitmask ? 1 : 0);
    if (b.metadata_bitmask) w.blob(as_view(*b.metadata_bitmask));
    w.blob(as_view(b.orderer_sig));
}

block decode_block(wire_reader& r) {
    block b;
    b.header = decode_block_header(r);
    b.txs = decode_list<transaction>(r, decode_transaction);
    std::uint8_t have = r.u8();
    if (have > 1) throw codec_error("wire: bad metadata flag");
    if (have) b.metadata_bitmask = r.blob();
    b.orderer_sig = r.blob();
    return b;
}

transaction decode_transaction_bytes(byte_view data) {
    wire_reader r(data);
    transaction t = decode_transaction(r);
    r.expect_end();
    return t;
}

block decode_block_bytes(byte_view data) {
    wire_reader r(data);
    block b = decode_block(r);
    r.expect_end();
    return b;
}

}  // namespace evov::core
