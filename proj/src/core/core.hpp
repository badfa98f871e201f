#pragma once

#include "core/codec.hpp"

namespace evov::core {

struct invalid_nonce : error {
    invalid_nonce() : error("empty nonce") {}
};

// Hash over the ordered content only: header (seq, prev_hash) plus the full
// transaction list. Validity bitmask and orderer signature are not covered.
hash256 hash_block(const block& b);
bytes block_hash_region(const block& b);

// tx_id = H(encode(client_id) || nonce); the nonce must be non-empty.
hash256 derive_txid(std::string_view client_id, byte_view nonce);

// Bytes an endorser signs: canonical (tx_id, rwset, response).
bytes endorsement_sign_bytes(const hash256& tx_id, const read_write_set& rwset, byte_view response);

// Bytes a client signs: the proposal with the signature field left empty.
bytes proposal_sign_bytes(const proposal& p);

std::size_t encoded_size(const transaction& t);

}  // namespace evov::core
