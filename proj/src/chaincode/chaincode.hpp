#pragma once

#include "core/core.hpp"
#include "ledger/ledger.hpp"

#include <functional>
#include <map>

namespace evov::chaincode {

struct already_installed : error {
    explicit already_installed(const std::string& id) : error("chaincode already installed: " + id) {}
};

struct unknown_chaincode : error {
    explicit unknown_chaincode(const std::string& id) : error("unknown chaincode: " + id) {}
};

struct simulation_failed : error {
    using error::error;
};

// Raised when a simulation exhausts its operation budget (the deterministic
// stand-in for a wall-clock watchdog).
struct simulation_aborted : error {
    simulation_aborted() : error("simulation aborted: op budget exhausted") {}
};

struct invalid_range : error {
    using error::error;
};

class sim_context;
using handler_fn = std::function<void(sim_context&)>;

struct chaincode_definition {
    std::string id;
    handler_fn handler;
    std::string policy;            // endorsement policy expression
    std::string vscc_id = "default";
};

// Ledger keys are namespaced per chaincode with a 0x00 separator; application
// keys must not contain 0x00.
std::string namespaced_key(const std::string& chaincode_id, const std::string& key);
std::string strip_namespace(const std::string& chaincode_id, const std::string& full_key);
std::string encode_range_query(const std::string& full_start, const std::string& full_end);
std::pair<std::string, std::string> decode_range_query(const std::string& query);
hash256 hash_range_result(const std::vector<std::pair<std::string, ledger::versioned_entry>>& entries);

class chaincode_registry {
public:
    void install(const std::string& channel, chaincode_definition def);
    const chaincode_definition* find(const std::string& channel, const std::string& id) const;
    const chaincode_definition& require(const std::string& channel, const std::string& id) const;
    std::vector<const chaincode_definition*> channel_chaincodes(const std::string& channel) const;

private:
    std::map<std::string, std::map<std::string, chaincode_definition>> by_channel_;
};

struct sim_options {
    std::int64_t op_budget = 10000;
    std::function<std::uint64_t()> entropy;  // peer-local randomness source, defaults to zero
};

struct sim_state;

// Shim handed to a chaincode handler during simulation. Reads come from a
// stable snapshot with read-your-writes; every state access is recorded into
// the accumulating read-write set and charged against the op budget.
class sim_context {
public:
    std::optional<bytes> get_state(const std::string& key);
    void put_state(const std::string& key, bytes value);
    void del_state(const std::string& key);
    // Entries with start <= key < end (application keys), in key order, with
    // pending own writes applied. Records a phantom-detection hash over the
    // snapshot-level result.
    std::vector<std::pair<std::string, bytes>> get_state_range(const std::string& start,
                                                               const std::string& end);
    // Read-only invocation of another chaincode on the same channel.
    bytes call_readonly(const std::string& chaincode_id, const std::string& operation,
                        const std::vector<bytes>& args);

    const std::string& operation() const { return operation_; }
    const std::vector<bytes>& args() const { return args_; }
    const hash256& tx_id() const;
    std::uint64_t entropy();
    void set_response(bytes r) { response_ = std::move(r); }
    const bytes& response() const { return response_; }

private:
    friend struct sim_state;
    sim_context(sim_state* st, std::string ns_prefix, bool read_only, std::string operation,
                std::vector<bytes> args);

    void charge();
    std::string full_key(const std::string& key) const;

    sim_state* st_;
    std::string ns_;
    bool read_only_;
    std::string operation_;
    std::vector<bytes> args_;
    bytes response_;
};

struct sim_result {
    bytes response;
    core::read_write_set rwset;
};

// Runs one simulation against `snap`. Handler exceptions become
// simulation_failed; budget exhaustion surfaces as simulation_aborted.
sim_result invoke_simulation(const chaincode_registry& reg, const std::string& channel,
                             const std::string& chaincode_id, const hash256& tx_id,
                             const std::string& operation, const std::vector<bytes>& args,
                             const ledger::state_snapshot& snap, const sim_options& opts = {});

}  // namespace evov::chaincode
