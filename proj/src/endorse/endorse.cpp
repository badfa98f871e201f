#include "endorse/endorse.hpp"

#include <algorithm>

namespace evov::endorse {

bool nonce_cache::seen_or_insert(const std::string& client_id, const bytes& nonce) {
    client_entry& e = by_client_[client_id];
    if (e.seen.contains(nonce)) return true;
    e.seen.insert(nonce);
    e.order.push_back(nonce);
    while (e.order.size() > cap_) {
        e.seen.erase(e.order.front());
        e.order.pop_front();
    }
    return false;
}

std::size_t nonce_cache::size(const std::string& client_id) const {
    auto it = by_client_.find(client_id);
    return it == by_client_.end() ? 0 : it->second.order.size();
}

core::proposal build_proposal(const msp::signing_identity& client, const std::string& chaincode_id,
                              const std::string& operation, std::vector<bytes> args, bytes nonce) {
    core::proposal p;
    p.client_id = client.ident.id;
    p.chaincode_id = chaincode_id;
    p.operation = operation;
    p.args = std::move(args);
    p.tx_id = core::derive_txid(p.client_id, as_view(nonce));  // rejects an empty nonce
    p.nonce = std::move(nonce);
    p.client_sig = msp::sign(client, as_view(core::proposal_sign_bytes(p)));
    return p;
}

proposal_response endorse_proposal(const endorser_context& ctx, const core::proposal& p,
                                   const ledger::state_snapshot& snap) {
    const msp::identity& client = ctx.msp->require(p.client_id);
    if (p.tx_id != core::derive_txid(p.client_id, as_view(p.nonce))) throw bad_client_signature();
    if (!msp::verify(client, as_view(core::proposal_sign_bytes(p)), as_view(p.client_sig)))
        throw bad_client_signature();

    const chaincode::chaincode_definition& def = ctx.registry->require(ctx.channel, p.chaincode_id);
    endorsement_policy policy = parse_policy(def.policy);
    principal self_p{ctx.self->ident.id, ctx.self->ident.org};
    if (ctx.self->ident.r != msp::role::peer || !policy_mentions(policy, self_p))
        throw not_an_endorser(ctx.self->ident.id);

    if (ctx.nonces && ctx.nonces->seen_or_insert(p.client_id, p.nonce)) throw nonce_replayed();

    chaincode::sim_result sim = chaincode::invoke_simulation(
        *ctx.registry, ctx.channel, p.chaincode_id, p.tx_id, p.operation, p.args, snap, ctx.sim_opts);

    proposal_response resp;
    resp.status = response_status::ok;
    resp.peer_id = ctx.self->ident.id;
    resp.endo.tx_id = p.tx_id;
    resp.endo.endorser_id = ctx.self->ident.id;
    resp.endo.rwset = std::move(sim.rwset);
    resp.endo.response = std::move(sim.response);
    resp.endo.signature = msp::sign(
        *ctx.self,
        as_view(core::endorsement_sign_bytes(resp.endo.tx_id, resp.endo.rwset, as_view(resp.endo.response))));
    return resp;
}

core::transaction collect_and_assemble(const core::proposal& p,
                                       const std::vector<proposal_response>& responses,
                                       const endorsement_policy& policy,
                                       const msp::msp_directory& msp) {
    struct group {
        bytes rwset_bytes;
        hash256 rwset_hash;
        std::vector<const proposal_response*> members;
    };
    std::map<bytes, group> groups;
    for (const auto& r : responses) {
        if (r.status != response_status::ok) continue;
        if (r.endo.tx_id != p.tx_id) continue;
        bytes rb = core::encode_bytes(r.endo.rwset);
        auto [it, fresh] = groups.try_emplace(rb);
        if (fresh) {
            it->second.rwset_bytes = rb;
            it->second.rwset_hash = crypto::sha256(as_view(rb));
        }
        it->second.members.push_back(&r);
    }
    if (groups.empty()) throw policy_unsatisfied("no successful endorsements");

    const group* best = nullptr;
    for (const auto& [rb, g] : groups) {
        if (!best || g.members.size() > best->members.size() ||
            (g.members.size() == best->members.size() &&
             std::lexicographical_compare(g.rwset_hash.begin(), g.rwset_hash.end(),
                                          best->rwset_hash.begin(), best->rwset_hash.end())))
            best = &g;
    }

    std::vector<principal> principals;
    std::set<std::string> seen_ids;
    for (const proposal_response* r : best->members) {
        if (!seen_ids.insert(r->endo.endorser_id).second) continue;
        const msp::identity& ident = msp.require(r->endo.endorser_id);
        principals.push_back(principal{ident.id, ident.org});
    }
    if (!eval_policy(policy, principals))
        throw policy_unsatisfied("largest matching-rwset group (" + std::to_string(best->members.size()) +
                                 " of " + std::to_string(responses.size()) + ") does not satisfy policy");

    core::transaction tx;
    tx.type = core::tx_type::normal;
    tx.prop = p;
    tx.rwset = best->members.front()->endo.rwset;
    std::set<std::string> added;
    std::vector<const proposal_response*> members = best->members;
    std::sort(members.begin(), members.end(), [](const proposal_response* a, const proposal_response* b) {
        return a->endo.endorser_id < b->endo.endorser_id;
    });
    for (const proposal_response* r : members)
        if (added.insert(r->endo.endorser_id).second) tx.endorsements.push_back(r->endo);
    return tx;
}

}  // namespace evov::endorse
