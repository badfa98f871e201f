#pragma once

#include <deque>
#include <memory>
#include <variant>

#include "endorse/endorse.hpp"
#include "fabcoin/fabcoin.hpp"
#include "gossip/gossip.hpp"
#include "harness/metrics.hpp"
#include "harness/scenario.hpp"
#include "harness/sim.hpp"
#include "ledger/ledger.hpp"
#include "order/order.hpp"
#include "validate/validate.hpp"

namespace evov::harness {

// ---------------------------------------------------------------- messages

struct proposal_msg {
    core::proposal prop;
    std::string reply_to;
};
struct proposal_resp_msg {
    endorse::proposal_response resp;
};
struct broadcast_msg {
    core::transaction tx;
    std::string reply_to;
};
struct broadcast_reject {
    hash256 txid;
    std::string reason;
};
struct deliver_subscribe {
    std::string peer_id;
    std::uint64_t from_seq = 0;
};
struct block_msg {
    core::block blk;
    bool from_orderer = false;
};
struct gossip_digest_msg {
    std::string from;
    std::uint64_t next_expected = 0;
};
struct alive_broadcast {
    gossip::alive_msg alive;
};
struct watch_txid_msg {
    hash256 txid;
    std::string reply_to;
};
struct query_txid_msg {
    hash256 txid;
    std::string reply_to;
};
struct txid_status_msg {
    hash256 txid;
    bool found = false;
    bool valid = false;
};
struct commit_note {
    hash256 txid;
    std::uint64_t seq = 0;
    std::uint32_t tx_index = 0;
    std::string code;
};

using message = std::variant<proposal_msg, proposal_resp_msg, broadcast_msg, broadcast_reject,
                             deliver_subscribe, block_msg, gossip_digest_msg, alive_broadcast,
                             watch_txid_msg, query_txid_msg, txid_status_msg, commit_note>;

// Messages on the gossip plane are subject to the scenario's drop rate;
// control traffic is only lost to partitions and dead nodes.
enum class plane : std::uint8_t { control = 0, gossip = 1 };

class sim_net;

struct node {
    node(sim_net* net, std::string id) : net(net), id(std::move(id)) {}
    virtual ~node() = default;
    virtual void handle(const message& m) = 0;

    sim_net* net;
    std::string id;
    bool up = true;
};

// ---------------------------------------------------------------- peers

class peer_node : public node {
public:
    peer_node(sim_net* net, std::string id, std::string org, bool observer);

    void handle(const message& m) override;
    void start();
    void crash();
    void restart();

    const ledger::block_ledger& led() const { return *ledger_; }
    ledger::state_snapshot snapshot() const { return ledger_->snapshot(); }
    const std::string& org() const { return org_; }
    const std::string& current_leader() const { return leader_; }
    bool observer() const { return observer_; }
    // seq -> first arrival time; the dissemination-latency probe.
    const std::map<std::uint64_t, std::uint64_t>& received_times() const { return received_us_; }

private:
    void open_ledger(bool fresh);
    void schedule_tick(std::uint64_t period, void (peer_node::*tick)());
    void on_proposal(const proposal_msg& m);
    void on_block(const block_msg& m);
    void schedule_validation(core::block b);
    void do_commit(core::block b, std::uint64_t val_start, std::uint64_t vscc_span,
                   std::uint64_t rw_span, std::uint64_t ledger_span);
    void on_digest(const gossip_digest_msg& m);
    void push_block(const core::block& b);
    void alive_tick();
    void leader_tick();
    void anti_entropy_tick();

    std::string org_;
    bool observer_ = false;
    std::optional<ledger::block_ledger> ledger_;
    gossip::membership_view view_;
    gossip::block_buffer buffer_;
    endorse::nonce_cache nonces_;
    sim::rng rng_;
    std::uint64_t endorse_busy_ = 0;
    std::uint64_t validate_busy_ = 0;
    std::string leader_;
    std::map<hash256, std::vector<std::string>> watches_;
    std::map<std::uint64_t, std::uint64_t> received_us_;  // seq -> first arrival
};

// ---------------------------------------------------------------- ordering

class osn_node : public node {
public:
    osn_node(sim_net* net, std::string id, std::uint32_t index);

    void handle(const message& m) override;
    void crash();
    void restart();
    // Wakes this node's serial consumer when an entry lands in the shared log.
    void notify_append();

    const order::osn& backend() const { return *backend_; }

private:
    void schedule_drain();
    void consume(std::uint64_t log_index, const order::log_entry& e);
    void arm_ttc();

    std::uint32_t index_;
    std::optional<order::osn> backend_;
    std::map<std::string, std::string> subscriber_by_org_;
    std::uint64_t ttc_armed_for_ = 0;  // next_seq a timeout is pending for; 0 = none
    std::uint64_t next_consume_ = 0;   // next shared-log index to service
    std::uint64_t service_busy_ = 0;   // when the serial consumer frees up
    bool drain_scheduled_ = false;

    friend class sim_net;
};

// ---------------------------------------------------------------- clients

class client_node : public node {
public:
    client_node(sim_net* net, std::string id, std::string org, std::string home_peer);

    void handle(const message& m) override;
    void start();
    bool idle() const { return ops_.empty(); }
    std::uint64_t aborted() const { return aborted_; }

private:
    struct pending_op {
        std::string op;  // "mint" | "spend"
        fabcoin::request req;
        std::vector<fabcoin::output_spec> pay_outs;  // spend outputs minus change
        core::proposal prop;
        std::vector<endorse::proposal_response> resps;
        std::vector<std::string> asked;
        std::vector<std::string> locked;  // coin keys this op reserved
        std::uint64_t submit_us = 0;
        std::uint32_t retries = 0;
        bool broadcasted = false;
        bool counts_inflight = true;  // deliberate double-spend twins don't
    };

    void maintain();
    void start_op();
    void submit(pending_op op);
    void resubmit(pending_op op);
    std::vector<std::string> choose_endorsers();
    void try_assemble(pending_op& op);
    void broadcast_tx(pending_op& op, core::transaction tx);
    void arm_timeout(const hash256& txid);
    void resolve(const hash256& txid, bool committed);
    void finish_op(const hash256& txid);
    std::uint32_t inflight() const;

    std::string org_;
    std::string home_peer_;
    sim::rng rng_;
    std::map<hash256, pending_op> ops_;
    std::set<std::string> locked_coins_;
    std::uint64_t aborted_ = 0;
    endorse::endorsement_policy policy_;
    std::vector<std::vector<std::string>> min_sets_;
};

// ---------------------------------------------------------------- the net

struct net_result {
    run_metrics metrics;
    std::uint64_t sim_end_us = 0;
    bool target_met = false;
    bool hit_time_cap = false;
    std::uint64_t submitted = 0;
    std::uint64_t aborted_ops = 0;
};

// Owns the event queue, the transport, and every actor of one simulated
// deployment. Fully deterministic in (scenario, seed).
class sim_net {
public:
    sim_net(scenario sc, std::optional<std::filesystem::path> rundir);
    ~sim_net();

    net_result run();

    // ---- actor services
    void send(const std::string& from, const std::string& to, message m, plane pl);
    void append_entry(order::log_entry e);
    void on_block_cut(const core::block& b);
    void register_submission(const hash256& txid, const std::string& client, const std::string& op,
                             std::uint64_t submit_us, std::uint32_t retries);
    void note_endorsed(const hash256& txid, std::uint64_t endorsed_us);
    void observer_committed(const core::block& b, const std::vector<validate::tx_code>& codes,
                            const block_metric& bm);
    bool submissions_open() const;
    bool reschedule_timers() const;
    std::uint64_t now() const { return q_.now(); }

    const scenario& sc() const { return sc_; }
    const channel_roster& roster() const { return roster_; }
    const order::channel_config& cfg() const { return cfg_; }
    const msp::msp_directory& msp() const { return roster_.msp; }
    const chaincode::chaincode_registry& registry() const { return registry_; }
    const validate::vscc_registry& vsccs() const { return vsccs_; }
    const validate::validation_context& vctx() const { return vctx_; }
    const core::block& genesis() const { return genesis_; }
    const order::total_order_log& log() const { return log_; }
    const msp::signing_identity& orderer_secret() const { return roster_.secret(roster_.orderer_id); }
    sim::sim_queue& queue() { return q_; }
    sim::rng& net_rng() { return net_rng_; }
    std::optional<std::filesystem::path> peer_dir(const std::string& peer_id) const;
    std::uint64_t cut_time(std::uint64_t seq) const;
    run_metrics& metrics() { return metrics_; }
    const std::string& observer_id() const { return observer_id_; }
    std::string assigned_osn(const std::string& org) const;
    std::uint32_t random_osn_pick(sim::rng& r) const;

    struct submission_info {
        std::string client;
        std::string op;
        std::uint64_t submit_us = 0;
        std::uint64_t endorsed_us = 0;
        std::uint32_t retries = 0;
    };
    const std::map<hash256, submission_info>& submissions() const { return submissions_; }

    peer_node* peer(const std::string& id);
    const std::map<std::string, std::unique_ptr<peer_node>>& peers() const { return peers_; }
    const std::map<std::string, std::unique_ptr<osn_node>>& osns() const { return osns_; }
    client_node* client(const std::string& id);
    const std::map<std::string, std::unique_ptr<client_node>>& clients() const { return clients_; }

    // msp with secrets lives in roster_; convenience accessors:
    const msp::signing_identity& secret(const std::string& id) const { return roster_.secret(id); }

private:
    void apply_fault(const fault_spec& f);
    std::string resolve_target(const std::string& target) const;
    bool partitioned(const std::string& a, const std::string& b) const;
    node* find_node(const std::string& id);

    scenario sc_;
    std::optional<std::filesystem::path> rundir_;
    sim::sim_queue q_;
    sim::rng net_rng_;
    channel_roster roster_;
    order::channel_config cfg_;
    core::block genesis_;
    chaincode::chaincode_registry registry_;
    validate::vscc_registry vsccs_;
    validate::validation_context vctx_;
    order::total_order_log log_;
    std::map<std::string, std::unique_ptr<peer_node>> peers_;
    std::map<std::string, std::unique_ptr<osn_node>> osns_;
    std::map<std::string, std::unique_ptr<client_node>> clients_;
    std::string observer_id_;

    struct active_partition {
        std::string name;
        std::set<std::string> a, b;
    };
    std::vector<active_partition> partitions_;

    std::map<hash256, submission_info> submissions_;
    std::map<std::uint64_t, std::uint64_t> cut_time_;
    run_metrics metrics_;
    std::uint64_t app_committed_ = 0;
    bool shutting_down_ = false;
    std::uint64_t timer_deadline_ = 0;
    std::uint64_t submitted_ = 0;

    friend class peer_node;
    friend class client_node;
    friend class osn_node;
};

}  // namespace evov::harness
