#include "common/crypto.hpp"

#include <sodium.h>

#include <mutex>

namespace evov::crypto {

namespace {
void ensure_init() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw error("sodium_init failed");
    });
}
}  // namespace

hash256 sha256(byte_view data) {
    ensure_init();
    hash256 out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

hash256 sha256_concat(std::initializer_list<byte_view> parts) {
    ensure_init();
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    for (auto p : parts) crypto_hash_sha256_update(&st, p.data(), p.size());
    hash256 out;
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

keypair ed25519_keypair(const std::array<std::uint8_t, key_seed_size>& seed) {
    ensure_init();
    keypair kp;
    kp.public_key.resize(ed25519_public_key_size);
    kp.secret_key.resize(ed25519_secret_key_size);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

bytes ed25519_sign(byte_view msg, byte_view secret_key) {
    ensure_init();
    if (secret_key.size() != ed25519_secret_key_size) throw error("ed25519_sign: bad secret key size");
    bytes sig(ed25519_signature_size);
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), secret_key.data());
    return sig;
}

bool ed25519_verify(byte_view msg, byte_view sig, byte_view public_key) {
    ensure_init();
    if (sig.size() != ed25519_signature_size) return false;
    if (public_key.size() != ed25519_public_key_size) return false;
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), public_key.data()) == 0;
}

}  // namespace evov::crypto
