#pragma once

#include "chaincode/chaincode.hpp"
#include "endorse/policy.hpp"
#include "msp/msp.hpp"

#include <deque>
#include <set>

namespace evov::endorse {

struct bad_client_signature : error {
    bad_client_signature() : error("bad client signature") {}
};

struct not_an_endorser : error {
    explicit not_an_endorser(const std::string& id) : error("not an endorser: " + id) {}
};

struct nonce_replayed : error {
    nonce_replayed() : error("nonce replayed") {}
};

struct policy_unsatisfied : error {
    using error::error;
};

enum class response_status : std::uint8_t { ok = 0, failed = 1 };

struct proposal_response {
    response_status status = response_status::failed;
    std::string peer_id;
    std::string message;        // failure reason
    core::endorsement endo;     // meaningful when status == ok
};

// Per-peer replay filter, bounded per client; oldest nonces fall out first.
class nonce_cache {
public:
    explicit nonce_cache(std::size_t per_client_cap = 10000) : cap_(per_client_cap) {}
    // True if the nonce was already present; inserts it otherwise.
    bool seen_or_insert(const std::string& client_id, const bytes& nonce);
    std::size_t size(const std::string& client_id) const;

private:
    struct client_entry {
        std::set<bytes> seen;
        std::deque<bytes> order;
    };
    std::map<std::string, client_entry> by_client_;
    std::size_t cap_;
};

// Client side: fresh-nonce proposal, signed. The nonce must be unique per
// client; tx_id derives from (client_id, nonce).
core::proposal build_proposal(const msp::signing_identity& client, const std::string& chaincode_id,
                              const std::string& operation, std::vector<bytes> args, bytes nonce);

struct endorser_context {
    const msp::msp_directory* msp = nullptr;
    const chaincode::chaincode_registry* registry = nullptr;
    std::string channel;
    const msp::signing_identity* self = nullptr;
    nonce_cache* nonces = nullptr;
    chaincode::sim_options sim_opts;
};

// Peer side: verify the client, check endorser eligibility against the
// chaincode's policy, simulate, and sign (tx_id, rwset, response).
// Throws bad_client_signature / not_an_endorser / nonce_replayed /
// chaincode::simulation_failed / chaincode::simulation_aborted.
proposal_response endorse_proposal(const endorser_context& ctx, const core::proposal& p,
                                   const ledger::state_snapshot& snap);

// Client side: pick the largest byte-identical-rwset group (ties broken by
// smaller rwset hash), check the policy over its endorsers, and assemble.
// Throws policy_unsatisfied.
core::transaction collect_and_assemble(const core::proposal& p,
                                       const std::vector<proposal_response>& responses,
                                       const endorsement_policy& policy,
                                       const msp::msp_directory& msp);

}  // namespace evov::endorse
