#pragma once

#include <filesystem>
#include <map>

#include "fabcoin/fabcoin.hpp"
#include "gossip/gossip.hpp"
#include "msp/msp.hpp"
#include "order/order.hpp"

namespace evov::harness {

struct bad_scenario : error {
    using error::error;
};

struct org_spec {
    std::string name;
    std::uint32_t peers = 2;
    std::uint32_t clients = 1;
};

// Scheduled disruption. Kinds: crash_peer, restart_peer (target is a peer id
// or "leader:<org>" resolved at fire time), crash_osn, restart_osn (target is
// an osn id), partition (sides a/b by node id, labeled by name), heal (by name).
struct fault_spec {
    std::string kind;
    std::uint64_t at_us = 0;
    std::string target;
    std::vector<std::string> a, b;
    std::string name;
};

// Virtual CPU costs of the modeled pipeline stages, in microseconds.
struct cost_model {
    std::uint64_t endorse_us = 1000;     // per proposal, at the endorsing peer
    std::uint64_t order_us = 300;        // per log entry, serial at each ordering node
    std::uint64_t vscc_us = 120;         // per tx, parallel across workers
    std::uint64_t rw_us = 15;            // per tx, sequential
    std::uint64_t ledger_us = 15;        // per tx, sequential
    std::uint64_t block_commit_us = 500; // per block, ledger overhead
};

struct workload_spec {
    std::uint64_t target_tx = 200;          // application txs to commit before winding down
    std::uint32_t inflight_per_client = 2;
    double spend_fraction = 0.8;            // remaining ops are mints
    double double_spend_rate = 0.0;         // fraction of spends submitted twice, same input
    std::uint64_t mint_amount = 100;
    std::uint32_t mint_outputs = 4;
    std::string label = "usd";
    std::uint64_t retry_timeout_us = 10'000'000;
    std::uint32_t max_retries = 10;
};

struct net_spec {
    std::uint64_t latency_min_us = 500;
    std::uint64_t latency_max_us = 2000;
    double gossip_drop_rate = 0.0;          // applies to the gossip plane only
};

struct scenario {
    std::string name = "run";
    std::uint64_t seed = 1;
    std::string channel = "ch1";
    std::vector<org_spec> orgs{{"org1", 2, 1}, {"org2", 2, 1}};
    std::uint32_t osns = 2;
    std::uint32_t cb_count = 1;
    std::uint32_t cb_threshold = 1;
    std::uint32_t batch_max_count = 10;
    std::uint64_t batch_max_bytes = 1 << 20;
    std::uint64_t batch_timeout_us = 2'000'000;
    std::string endorsement_policy;          // empty: OR over all orgs
    std::string fabcoin_id = "fabcoin";
    workload_spec workload;
    net_spec net;
    gossip::gossip_config gossip;
    cost_model costs;
    std::uint32_t validation_workers = 4;
    std::uint64_t max_sim_us = 600'000'000;
    std::vector<fault_spec> faults;
    std::string observer;                    // empty: first peer of first org
};

scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const scenario& sc);
scenario load_scenario_file(const std::filesystem::path& p);

std::string default_policy(const scenario& sc);
std::string default_observer(const scenario& sc);

// All channel identities with their secrets, generated deterministically from
// the scenario seed.
struct channel_roster {
    msp::msp_directory msp;
    std::map<std::string, msp::signing_identity> secrets;
    std::vector<std::string> peer_ids;
    std::map<std::string, std::vector<std::string>> org_peers;
    std::map<std::string, std::vector<std::string>> org_clients;
    std::vector<std::string> cb_ids;
    std::string orderer_id;

    const msp::signing_identity& secret(const std::string& id) const;
};

channel_roster make_roster(const scenario& sc);

std::array<std::uint8_t, 32> identity_key_seed(std::uint64_t root_seed, const std::string& id);

// The channel bootstrap document embedded in the genesis config transaction:
// batch rules, access lists, every identity's public key, chaincode
// declarations, application parameters. Everything a verifier needs.
bytes build_config_payload(const scenario& sc, const channel_roster& roster);

// Public channel facts reconstructed from a config payload.
struct channel_setup {
    order::channel_config cfg;
    msp::msp_directory msp;
    std::string orderer_id;
    std::string fabcoin_id;
    std::string fabcoin_policy;
    fabcoin::cb_config cbs;
    gossip::gossip_config gossip;
};

channel_setup setup_from_payload(byte_view payload);

}  // namespace evov::harness
