#include "msp/msp.hpp"

namespace evov::msp {

const char* role_name(role r) {
    switch (r) {
        case role::client: return "client";
        case role::peer: return "peer";
        case role::orderer: return "orderer";
    }
    throw error("bad role");
}

role role_from_name(std::string_view name) {
    if (name == "client") return role::client;
    if (name == "peer") return role::peer;
    if (name == "orderer") return role::orderer;
    throw error("bad role name: " + std::string(name));
}

signing_identity msp_directory::generate(const std::string& id, const std::string& org, role r,
                                         const std::array<std::uint8_t, crypto::key_seed_size>& key_seed) {
    auto kp = crypto::ed25519_keypair(key_seed);
    identity ident{id, org, r, kp.public_key};
    add(ident);
    return signing_identity{std::move(ident), std::move(kp.secret_key)};
}

void msp_directory::add(identity ident) {
    if (identities_.contains(ident.id)) throw duplicate_identity(ident.id);
    orgs_.insert(ident.org);
    identities_.emplace(ident.id, std::move(ident));
}

const identity* msp_directory::find(const std::string& id) const {
    auto it = identities_.find(id);
    return it == identities_.end() ? nullptr : &it->second;
}

const identity& msp_directory::require(const std::string& id) const {
    const identity* p = find(id);
    if (!p) throw unknown_identity(id);
    return *p;
}

bool msp_directory::is_member(const std::string& id, const std::string& org) const {
    const identity* p = find(id);
    return p && p->org == org;
}

std::vector<const identity*> msp_directory::org_members(const std::string& org, std::optional<role> want) const {
    std::vector<const identity*> out;
    for (const auto& [id, ident] : identities_)
        if (ident.org == org && (!want || ident.r == *want)) out.push_back(&ident);
    return out;
}

bytes sign(const signing_identity& signer, byte_view msg) {
    return crypto::ed25519_sign(msg, as_view(signer.secret_key));
}

bool verify(const msp_directory& dir, const std::string& signer_id, byte_view msg, byte_view sig) {
    return verify(dir.require(signer_id), msg, sig);
}

bool verify(const identity& signer, byte_view msg, byte_view sig) {
    return crypto::ed25519_verify(msg, sig, as_view(signer.public_key));
}

}  // namespace evov::msp
