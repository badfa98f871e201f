#pragma once

#include "common/bytes.hpp"

#include <initializer_list>

namespace evov::crypto {

inline constexpr std::size_t ed25519_public_key_size = 32;
inline constexpr std::size_t ed25519_secret_key_size = 64;
inline constexpr std::size_t ed25519_signature_size = 64;
inline constexpr std::size_t key_seed_size = 32;

struct keypair {
    bytes public_key;
    bytes secret_key;
};

hash256 sha256(byte_view data);
hash256 sha256_concat(std::initializer_list<byte_view> parts);

// Keys derive deterministically from a 32-byte seed; signing itself is
// deterministic, so identical inputs always produce identical signatures.
keypair ed25519_keypair(const std::array<std::uint8_t, key_seed_size>& seed);
bytes ed25519_sign(byte_view msg, byte_view secret_key);
bool ed25519_verify(byte_view msg, byte_view sig, byte_view public_key);

}  // namespace evov::crypto
