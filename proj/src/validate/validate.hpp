#pragma once

#include <functional>
#include <map>

#include "chaincode/chaincode.hpp"
#include "endorse/policy.hpp"
#include "ledger/ledger.hpp"
#include "msp/msp.hpp"

namespace evov::validate {

// Per-transaction validation verdict, recorded in the block's validity bitmask
// (bit set = valid). Invalid transactions stay in the block but have no state
// effect.
enum class tx_code : std::uint8_t {
    valid = 0,
    bad_endorsement = 1,
    mvcc_conflict = 2,
    phantom_read = 3,
    duplicate_txid = 4,
    bad_format = 5,
};

const char* tx_code_name(tx_code c);

struct vscc_input {
    const msp::msp_directory& msp;
    const std::string& channel;
    const chaincode::chaincode_definition& def;
    const endorse::endorsement_policy& policy;
    const core::transaction& tx;
    const ledger::state_snapshot& pre_state;  // state at block start
};

// Pluggable endorsement validator per chaincode. Returns false (with a
// reason) to mark the transaction bad_endorsement. Must be deterministic and
// side-effect free; may be invoked concurrently for different transactions.
using vscc_fn = std::function<bool(const vscc_input&, std::string& reason)>;

class vscc_registry {
public:
    void add(const std::string& id, vscc_fn fn);
    const vscc_fn* find(const std::string& id) const;

private:
    std::map<std::string, vscc_fn> fns_;
};

// Registry with the stock "default" validator: every endorsement must carry
// the transaction's read-write set, verify against a known peer identity, and
// the set of endorsers must satisfy the chaincode's endorsement policy.
vscc_registry make_vscc_registry();

bool default_vscc(const vscc_input& in, std::string& reason);

struct validation_context {
    const msp::msp_directory* msp = nullptr;
    const chaincode::chaincode_registry* registry = nullptr;
    const vscc_registry* vsccs = nullptr;
    std::string channel;
    unsigned workers = 0;  // >1 runs the per-tx endorsement phase on a thread pool
};

// Phase 1: per-transaction syntactic and endorsement-policy checks against the
// block-start snapshot. Independent across transactions (parallelizable).
std::vector<tx_code> vscc_check_block(const validation_context& ctx, const core::block& b,
                                      const ledger::state_snapshot& pre_state);

// Phase 2: sequential duplicate-txid and read/write-set checks. Reads must
// still carry the current committed version (taking earlier valid
// transactions of this block into account); range queries are re-executed and
// compared by hash. Valid transactions' writes become visible to later ones.
std::vector<tx_code> rw_check_block(const core::block& b, std::vector<tx_code> codes,
                                    const ledger::state_snapshot& pre_state,
                                    const ledger::block_ledger& led);

std::vector<tx_code> validate_block(const validation_context& ctx, const core::block& b,
                                    const ledger::block_ledger& led);

std::vector<bool> codes_to_validity(const std::vector<tx_code>& codes);

}  // namespace evov::validate
