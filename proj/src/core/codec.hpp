#pragma once

#include "core/types.hpp"

namespace evov::core {

struct codec_error : error {
    using error::error;
};

// Canonical binary writer. Fixed field order, little-endian integers, u32
// length prefixes; the encoding of every type is injective and decodable.
class wire_writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void raw(byte_view data) { buf_.insert(buf_.end(), data.begin(), data.end()); }
    void blob(byte_view data);         // u32 length + raw
    void str(std::string_view s);      // u32 length + raw
    void hash(const hash256& h) { raw(as_view(h)); }

    const bytes& data() const { return buf_; }
    bytes take() { return std::move(buf_); }

private:
    bytes buf_;
};

class wire_reader {
public:
    explicit wire_reader(byte_view data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    bytes blob();
    std::string str();
    hash256 hash();
    bool done() const { return pos_ == data_.size(); }
    void expect_end() const;

private:
    byte_view need(std::size_t n);
    byte_view data_;
    std::size_t pos_ = 0;
};

void encode(wire_writer& w, const version& v);
void encode(wire_writer& w, const read_entry& e);
void encode(wire_writer& w, const range_read& r);
void encode(wire_writer& w, const write_entry& e);
void encode(wire_writer& w, const read_write_set& rw);
void encode(wire_writer& w, const proposal& p);
void encode(wire_writer& w, const endorsement& e);
void encode(wire_writer& w, const transaction& t);
void encode(wire_writer& w, const block_header& h);
void encode(wire_writer& w, const block& b);

version decode_version(wire_reader& r);
read_entry decode_read_entry(wire_reader& r);
range_read decode_range_read(wire_reader& r);
write_entry decode_write_entry(wire_reader& r);
read_write_set decode_read_write_set(wire_reader& r);
proposal decode_proposal(wire_reader& r);
endorsement decode_endorsement(wire_reader& r);
transaction decode_transaction(wire_reader& r);
block_header decode_block_header(wire_reader& r);
block decode_block(wire_reader& r);

template <typename T>
bytes encode_bytes(const T& v) {
    wire_writer w;
    encode(w, v);
    return w.take();
}

// Full decode of a standalone buffer; trailing bytes are an error.
transaction decode_transaction_bytes(byte_view data);
block decode_block_bytes(byte_view data);

}  // namespace evov::core
