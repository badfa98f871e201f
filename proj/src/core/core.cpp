#include "core/core.hpp"

#include "common/crypto.hpp"

namespace evov::core {

std::strong_ordering compare_versions(const version& a, const version& b) { return a <=> b; }

bool bitmask_get(const bytes& mask, std::size_t i) {
    std::size_t byte = i / 8;
    if (byte >= mask.size()) return false;
    return (mask[byte] >> (i % 8)) & 1;
}

bytes bitmask_pack(const std::vector<bool>& bits) {
    bytes mask((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) mask[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return mask;
}

bytes block_hash_region(const block& b) {
    wire_writer w;
    encode(w, b.header);
    w.u32(static_cast<std::uint32_t>(b.txs.size()));
    for (const auto& t : b.txs) encode(w, t);
    return w.take();
}

hash256 hash_block(const block& b) { return crypto::sha256(as_view(block_hash_region(b))); }

hash256 derive_txid(std::string_view client_id, byte_view nonce) {
    if (nonce.empty()) throw invalid_nonce();
    wire_writer w;
    w.str(client_id);
    return crypto::sha256_concat({as_view(w.data()), nonce});
}

bytes endorsement_sign_bytes(const hash256& tx_id, const read_write_set& rwset, byte_view response) {
    wire_writer w;
    w.hash(tx_id);
    encode(w, rwset);
    w.blob(response);
    return w.take();
}

bytes proposal_sign_bytes(const proposal& p) {
    proposal unsigned_copy = p;
    unsigned_copy.client_sig.clear();
    return encode_bytes(unsigned_copy);
}

std::size_t encoded_size(const transaction& t) { return encode_bytes(t).size(); }

}  // namespace evov::core
