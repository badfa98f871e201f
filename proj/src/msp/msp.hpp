#pragma once

#include "common/bytes.hpp"
#include "common/crypto.hpp"

#include <map>
#include <optional>
#include <set>

namespace evov::msp {

struct duplicate_identity : error {
    explicit duplicate_identity(const std::string& id) : error("duplicate identity: " + id) {}
};

struct unknown_identity : error {
    explicit unknown_identity(const std::string& id) : error("unknown identity: " + id) {}
};

enum class role : std::uint8_t { client = 0, peer = 1, orderer = 2 };

const char* role_name(role r);
role role_from_name(std::string_view name);

struct identity {
    std::string id;
    std::string org;
    role r = role::client;
    bytes public_key;
    bool operator==(const identity&) const = default;
};

struct signing_identity {
    identity ident;
    bytes secret_key;
};

// Registry of all identities on a channel. Populated at bootstrap, then only
// read; lookups never mutate.
class msp_directory {
public:
    // Deterministic: the key pair derives from key_seed alone.
    signing_identity generate(const std::string& id, const std::string& org, role r,
                              const std::array<std::uint8_t, crypto::key_seed_size>& key_seed);

    void add(identity ident);  // throws duplicate_identity

    const identity* find(const std::string& id) const;
    const identity& require(const std::string& id) const;  // throws unknown_identity
    bool is_member(const std::string& id, const std::string& org) const;
    const std::set<std::string>& orgs() const { return orgs_; }
    const std::map<std::string, identity>& identities() const { return identities_; }
    std::vector<const identity*> org_members(const std::string& org, std::optional<role> want = {}) const;

private:
    std::map<std::string, identity> identities_;
    std::set<std::string> orgs_;
};

bytes sign(const signing_identity& signer, byte_view msg);

// Verification against the directory: unknown signer throws unknown_identity,
// a bad signature just returns false.
bool verify(const msp_directory& dir, const std::string& signer_id, byte_view msg, byte_view sig);
bool verify(const identity& signer, byte_view msg, byte_view sig);

}  // namespace evov::msp
