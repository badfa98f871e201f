#pragma once

#include "chaincode/chaincode.hpp"
#include "msp/msp.hpp"
#include "validate/validate.hpp"

namespace evov::fabcoin {

struct bad_request : error {
    using error::error;
};

struct insufficient_funds : error {
    using error::error;
};

// One unspent coin: its amount, owning identity, and currency label.
struct coin_value {
    std::uint64_t amount = 0;
    std::string owner;
    std::string label;
    bool operator==(const coin_value&) const = default;
};

bytes encode_coin(const coin_value& c);
coin_value decode_coin(byte_view data);

// Coins created by transaction `txid` get keys "<hex txid>.<j>", j counted
// from 1 in output order.
std::string coin_key(const hash256& txid, std::uint32_t j);

struct output_spec {
    std::uint64_t amount = 0;
    std::string owner;
    bool operator==(const output_spec&) const = default;
};

enum class request_kind : std::uint8_t { mint = 0, spend = 1 };

// The application payload carried in args[0] of a fabcoin proposal. Inputs
// name existing coin keys; outputs describe coins to create. `sigs` hold
// authorizations over the request core plus the proposal nonce: central banks
// for mint, every input owner for spend.
struct request {
    request_kind kind = request_kind::mint;
    std::vector<std::string> inputs;
    std::vector<output_spec> outputs;
    std::string label;
    std::vector<std::pair<std::string, bytes>> sigs;
    bool operator==(const request&) const = default;
};

bytes encode_request(const request& r);
request decode_request(byte_view data);
// Everything except the signature list; what `sigs` entries sign, together
// with the proposal nonce.
bytes request_core_bytes(const request& r);
bytes request_sign_msg(const request& r, const bytes& nonce);

struct cb_config {
    std::vector<std::string> cb_ids;   // identities allowed to authorize mints
    std::uint32_t threshold = 1;       // distinct central-bank signatures required
};

request make_mint_request(std::vector<output_spec> outputs, std::string label,
                          const std::vector<const msp::signing_identity*>& cbs, const bytes& nonce);
request make_spend_request(std::vector<std::string> inputs, std::vector<output_spec> outputs,
                           std::string label,
                           const std::vector<const msp::signing_identity*>& owners,
                           const bytes& nonce);

// Chaincode definition implementing mint/spend. The handler performs the
// cheap structural subset of the checks (the custom validator re-checks
// everything, signatures included, at commit time).
chaincode::chaincode_definition make_chaincode(std::string id, std::string policy);

// Commit-time validator: authorization signatures, exact read/write-set
// shape, value conservation against the block-start state, label agreement.
validate::vscc_fn make_vscc(cb_config cfg);

// All coins owned by `owner` under chaincode `cc_id`, in key order.
std::vector<std::pair<std::string, coin_value>> coins_of(const ledger::state_snapshot& snap,
                                                         const std::string& cc_id,
                                                         const std::string& owner);
std::uint64_t balance_of(const ledger::state_snapshot& snap, const std::string& cc_id,
                         const std::string& owner, const std::string& label);

// Greedy coin selection: smallest-key-first inputs covering `amount`, plus
// the change amount left over. Throws insufficient_funds.
struct spend_plan {
    std::vector<std::string> inputs;
    std::uint64_t change = 0;
};
spend_plan plan_spend(const ledger::state_snapshot& snap, const std::string& cc_id,
                      const std::string& owner, const std::string& label, std::uint64_t amount);

}  // namespace evov::fabcoin
