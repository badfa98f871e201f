#include "harness/net.hpp"

#include <algorithm>

#include "core/codec.hpp"

namespace evov::harness {

using namespace core;

// ---------------------------------------------------------------- peer_node

peer_node::peer_node(sim_net* net, std::string id, std::string org, bool observer)
    : node(net, std::move(id)),
      org_(std::move(org)),
      observer_(observer),
      view_(this->id),
      buffer_(1, net->sc().gossip.buffer_capacity),
      rng_(sim::derive_seed(net->sc().seed, "peer:" + this->id)) {
    open_ledger(true);
}

void peer_node::open_ledger(bool fresh) {
    ledger::ledger_options opts;
    opts.dir = net->peer_dir(id);
    // Long cadence keeps the recovery path replaying real blocks.
    opts.checkpoint_every = 64;
    (void)fresh;
    ledger_ = ledger::block_ledger::open(opts);
    if (ledger_->empty()) {
        ledger_->commit_block(net->genesis(), std::vector<bool>{true});
    }
}

void peer_node::start() {
    buffer_ = gossip::block_buffer(ledger_->height() + 1, net->sc().gossip.buffer_capacity);
    const auto& g = net->sc().gossip;
    schedule_tick(g.alive_period_us, &peer_node::alive_tick);
    schedule_tick(g.alive_period_us, &peer_node::leader_tick);
    schedule_tick(g.push_period_us, &peer_node::anti_entropy_tick);
    // Channel-join election; without it the org waits a whole tick period
    // before anyone pulls blocks from the ordering service.
    net->queue().after(rng_.below(2000) + 1, [this] {
        if (up) leader_tick();
    });
}

void peer_node::schedule_tick(std::uint64_t period, void (peer_node::*tick)()) {
    struct looper {
        peer_node* p;
        std::uint64_t period;
        void (peer_node::*tick)();
        void operator()() const {
            (p->*tick)();
            if (p->net->reschedule_timers()) p->net->queue().after(period, *this);
        }
    };
    // Random phase offsets stagger the fleet so ticks don't synchronize.
    net->queue().after(rng_.below(period) + 1, looper{this, period, tick});
}

void peer_node::crash() { up = false; }

void peer_node::restart() {
    up = true;
    // Recovery replays durable storage; without a run directory the in-memory
    // ledger itself stands in for the disk, so it must not be reset.
    if (net->peer_dir(id)) open_ledger(false);
    buffer_ = gossip::block_buffer(ledger_->height() + 1, net->sc().gossip.buffer_capacity);
    view_ = gossip::membership_view(id);
    watches_.clear();
    nonces_ = endorse::nonce_cache();
    endorse_busy_ = net->now();
    validate_busy_ = net->now();
    leader_.clear();
}

void peer_node::handle(const message& m) {
    if (!up) return;
    if (const auto* p = std::get_if<proposal_msg>(&m)) {
        on_proposal(*p);
    } else if (const auto* b = std::get_if<block_msg>(&m)) {
        on_block(*b);
    } else if (const auto* d = std::get_if<gossip_digest_msg>(&m)) {
        on_digest(*d);
    } else if (const auto* a = std::get_if<alive_broadcast>(&m)) {
        view_.integrate(a->alive, net->now());
    } else if (const auto* w = std::get_if<watch_txid_msg>(&m)) {
        if (ledger_->has_txid(w->txid)) {
            auto [loc, tx] = ledger_->get_tx(w->txid);
            net->send(id, w->reply_to,
                      commit_note{w->txid, loc.seq, loc.tx_index, loc.valid ? "valid" : "invalid"},
                      plane::control);
        } else {
            watches_[w->txid].push_back(w->reply_to);
        }
    } else if (const auto* q = std::get_if<query_txid_msg>(&m)) {
        txid_status_msg st{q->txid, false, false};
        if (ledger_->has_txid(q->txid)) {
            auto [loc, tx] = ledger_->get_tx(q->txid);
            st.found = true;
            st.valid = loc.valid;
        }
        net->send(id, q->reply_to, st, plane::control);
    }
}

void peer_node::on_proposal(const proposal_msg& m) {
    auto start = std::max(net->now(), endorse_busy_);
    endorse_busy_ = start + net->sc().costs.endorse_us;
    net->queue().at(endorse_busy_, [this, m] {
        if (!up) return;
        endorse::endorser_context ectx;
        ectx.msp = &net->msp();
        ectx.registry = &net->registry();
        ectx.channel = net->sc().channel;
        ectx.self = &net->secret(id);
        ectx.nonces = &nonces_;
        endorse::proposal_response resp;
        try {
            resp = endorse::endorse_proposal(ectx, m.prop, ledger_->snapshot());
        } catch (const std::exception& e) {
            resp.status = endorse::response_status::failed;
            resp.peer_id = id;
            resp.message = e.what();
            resp.endo.tx_id = m.prop.tx_id;  // lets the client correlate failures
        }
        net->send(id, m.reply_to, proposal_resp_msg{std::move(resp)}, plane::control);
    });
}

void peer_node::on_block(const block_msg& m) {
    auto seq = m.blk.header.seq;
    if (seq < buffer_.next_expected()) return;
    if (!received_us_.contains(seq)) received_us_[seq] = net->now();
    auto deliverable = buffer_.insert(m.blk);
    for (auto& b : deliverable) {
        push_block(b);
        schedule_validation(std::move(b));
    }
}

void peer_node::push_block(const core::block& b) {
    auto members = net->roster().org_peers.at(org_);
    std::vector<std::string> candidates;
    for (const auto& p : members) {
        if (p != id) candidates.push_back(p);
    }
    auto targets = gossip::pick_fanout(std::move(candidates), net->sc().gossip.fanout,
                                       [this](std::uint64_t n) { return rng_.below(n); });
    for (const auto& t : targets) {
        net->send(id, t, block_msg{b, false}, plane::gossip);
    }
}

void peer_node::schedule_validation(core::block b) {
    const auto& c = net->sc().costs;
    auto n = static_cast<std::uint64_t>(b.txs.size());
    auto w = std::max<std::uint64_t>(1, net->sc().validation_workers);
    auto vscc_span = ((n + w - 1) / w) * c.vscc_us;
    auto rw_span = n * c.rw_us;
    auto ledger_span = n * c.ledger_us + c.block_commit_us;
    auto start = std::max(net->now(), validate_busy_);
    validate_busy_ = start + vscc_span + rw_span + ledger_span;
    net->queue().at(validate_busy_,
                    [this, b = std::move(b), start, vscc_span, rw_span, ledger_span]() mutable {
                        do_commit(std::move(b), start, vscc_span, rw_span, ledger_span);
                    });
}

void peer_node::do_commit(core::block b, std::uint64_t val_start, std::uint64_t vscc_span,
                          std::uint64_t rw_span, std::uint64_t ledger_span) {
    if (!up) return;
    if (ledger_->height() + 1 != b.header.seq) return;  // crashed mid-stream, resynced later
    auto codes = validate::validate_block(net->vctx(), b, *ledger_);
    ledger_->commit_block(b, validate::codes_to_validity(codes));

    for (std::size_t i = 0; i < b.txs.size(); ++i) {
        auto it = watches_.find(b.txs[i].prop.tx_id);
        if (it == watches_.end()) continue;
        for (const auto& cl : it->second) {
            net->send(id, cl,
                      commit_note{b.txs[i].prop.tx_id, b.header.seq,
                                  static_cast<std::uint32_t>(i), validate::tx_code_name(codes[i])},
                      plane::control);
        }
        watches_.erase(it);
    }

    if (observer_) {
        block_metric bm;
        bm.seq = b.header.seq;
        bm.txs = static_cast<std::uint32_t>(b.txs.size());
        for (auto c : codes) {
            if (c == validate::tx_code::valid) ++bm.valid;
        }
        bm.cut_us = net->cut_time(b.header.seq);
        bm.received_us = received_us_.contains(b.header.seq) ? received_us_[b.header.seq] : val_start;
        bm.val_start_us = val_start;
        bm.committed_us = net->now();
        bm.vscc_span_us = vscc_span;
        bm.rw_span_us = rw_span;
        bm.ledger_span_us = ledger_span;
        net->observer_committed(b, codes, bm);
    }
}

void peer_node::on_digest(const gossip_digest_msg& m) {
    if (ledger_->empty()) return;
    auto height = ledger_->height();
    auto limit = std::min<std::uint64_t>(height, m.next_expected + 7);
    for (auto seq = m.next_expected; seq <= limit && seq >= 1; ++seq) {
        net->send(id, m.from, block_msg{ledger_->get_block(seq), false}, plane::gossip);
    }
}

void peer_node::alive_tick() {
    if (!up) return;
    view_.observe_self(net->now());
    gossip::alive_msg a{id, view_.heartbeat(id)};
    for (const auto& p : net->roster().org_peers.at(org_)) {
        if (p != id) net->send(id, p, alive_broadcast{a}, plane::gossip);
    }
}

void peer_node::leader_tick() {
    if (!up) return;
    auto alive = view_.alive_peers(net->now(), net->sc().gossip.suspect_timeout_us);
    alive.push_back(id);
    auto leader = gossip::elect_leader(alive);
    leader_ = leader.value_or("");
    if (leader_ == id) {
        // Re-subscribing every tick keeps the ordering service pointed at the
        // current leader across elections and restarts; from_seq makes the
        // refresh free when the peer is already caught up.
        net->send(id, net->assigned_osn(org_), deliver_subscribe{id, buffer_.next_expected()},
                  plane::control);
    }
}

void peer_node::anti_entropy_tick() {
    if (!up) return;
    auto alive = view_.alive_peers(net->now(), net->sc().gossip.suspect_timeout_us);
    if (alive.empty()) return;
    const auto& target = alive[rng_.below(alive.size())];
    net->send(id, target, gossip_digest_msg{id, buffer_.next_expected()}, plane::gossip);
}

// ---------------------------------------------------------------- osn_node

osn_node::osn_node(sim_net* net, std::string id, std::uint32_t index)
    : node(net, std::move(id)), index_(index) {
    backend_.emplace(net->cfg(), &net->orderer_secret(), net->genesis());
}

void osn_node::handle(const message& m) {
    if (!up) return;
    if (const auto* b = std::get_if<broadcast_msg>(&m)) {
        try {
            order::check_broadcast(net->cfg(), net->msp(), b->tx, encoded_size(b->tx));
        } catch (const std::exception& e) {
            net->send(id, b->reply_to, broadcast_reject{b->tx.prop.tx_id, e.what()},
                      plane::control);
            return;
        }
        order::log_entry e;
        e.k = order::log_entry::kind::tx;
        e.tx = b->tx;
        net->append_entry(std::move(e));
    } else if (const auto* s = std::get_if<deliver_subscribe>(&m)) {
        const auto& org = net->msp().require(s->peer_id).org;
        subscriber_by_org_[org] = s->peer_id;
        auto height = backend_->chain_height();
        for (auto seq = std::max<std::uint64_t>(1, s->from_seq); seq <= height; ++seq) {
            net->send(id, s->peer_id, block_msg{backend_->block_at(seq), true}, plane::control);
        }
    }
}

void osn_node::crash() { up = false; }

void osn_node::restart() {
    // The shared log is durable; the consumer resumes where it stopped.
    up = true;
    service_busy_ = net->now();
    schedule_drain();
}

void osn_node::notify_append() { schedule_drain(); }

void osn_node::schedule_drain() {
    if (!up || drain_scheduled_) return;
    if (next_consume_ >= net->log().size()) return;
    drain_scheduled_ = true;
    service_busy_ = std::max(service_busy_, net->now()) + net->sc().costs.order_us;
    net->queue().at(service_busy_, [this] {
        drain_scheduled_ = false;
        if (!up) return;
        auto idx = next_consume_++;
        consume(idx, net->log().at(idx));
        schedule_drain();
    });
}

void osn_node::consume(std::uint64_t log_index, const order::log_entry& e) {
    auto blocks = backend_->consume(log_index, e);
    for (const auto* bp : blocks) {
        net->on_block_cut(*bp);
        for (const auto& [org, peer] : subscriber_by_org_) {
            net->send(id, peer, block_msg{*bp, true}, plane::control);
        }
    }
    arm_ttc();
}

void osn_node::arm_ttc() {
    const auto& cutter = backend_->cutter();
    if (cutter.pending_empty()) {
        ttc_armed_for_ = 0;
        return;
    }
    auto seq = cutter.next_seq();
    if (ttc_armed_for_ == seq) return;
    ttc_armed_for_ = seq;
    net->queue().after(net->cfg().batch_timeout_us, [this, seq] {
        if (ttc_armed_for_ != seq) return;
        ttc_armed_for_ = 0;
        const auto& c = backend_->cutter();
        if (c.next_seq() == seq && !c.pending_empty()) {
            order::log_entry e;
            e.k = order::log_entry::kind::time_to_cut;
            e.ttc.intended_seq = seq;
            net->append_entry(std::move(e));
        } else {
            arm_ttc();
        }
    });
}

// ---------------------------------------------------------------- client_node

client_node::client_node(sim_net* net, std::string id, std::string org, std::string home_peer)
    : node(net, std::move(id)),
      org_(std::move(org)),
      home_peer_(std::move(home_peer)),
      rng_(sim::derive_seed(net->sc().seed, "client:" + this->id)) {
    policy_ = endorse::parse_policy(default_policy(net->sc()));
    min_sets_ = endorse::minimal_satisfying_sets(policy_);
}

void client_node::start() { maintain(); }

std::uint32_t client_node::inflight() const {
    std::uint32_t n = 0;
    for (const auto& [txid, op] : ops_) {
        if (op.counts_inflight) ++n;
    }
    return n;
}

void client_node::maintain() {
    if (!up) return;
    while (net->submissions_open() && inflight() < net->sc().workload.inflight_per_client) {
        start_op();
    }
}

void client_node::start_op() {
    const auto& w = net->sc().workload;
    auto snap = net->peer(home_peer_)->snapshot();
    auto mine = fabcoin::coins_of(snap, net->sc().fabcoin_id, id);
    std::vector<std::pair<std::string, fabcoin::coin_value>> spendable;
    std::uint64_t total = 0;
    for (auto& [key, coin] : mine) {
        if (coin.label != w.label || locked_coins_.contains(key)) continue;
        total += coin.amount;
        spendable.emplace_back(key, coin);
    }

    bool do_spend = total > 0 && rng_.chance(w.spend_fraction);
    pending_op op;
    auto nonce = rng_.random_bytes(16);
    if (!do_spend) {
        op.op = "mint";
        std::vector<fabcoin::output_spec> outs;
        auto n = std::max<std::uint32_t>(1, w.mint_outputs);
        auto each = std::max<std::uint64_t>(1, w.mint_amount / n);
        std::uint64_t left = w.mint_amount;
        for (std::uint32_t i = 0; i + 1 < n && left > each; ++i) {
            outs.push_back({each, id});
            left -= each;
        }
        outs.push_back({left, id});
        std::vector<const msp::signing_identity*> cbs;
        for (const auto& cb : net->roster().cb_ids) cbs.push_back(&net->secret(cb));
        op.req = fabcoin::make_mint_request(std::move(outs), w.label, cbs, nonce);
    } else {
        op.op = "spend";
        auto amount = rng_.between(1, total);
        std::vector<std::string> inputs;
        std::uint64_t gathered = 0;
        for (const auto& [key, coin] : spendable) {
            inputs.push_back(key);
            gathered += coin.amount;
            if (gathered >= amount) break;
        }
        const auto& all_clients = net->clients();
        auto pick = rng_.below(all_clients.size());
        auto it = all_clients.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(pick));
        const auto& to = it->first;
        op.pay_outs = {{amount, to}};
        auto outs = op.pay_outs;
        if (gathered > amount) outs.push_back({gathered - amount, id});
        op.req = fabcoin::make_spend_request(inputs, std::move(outs), w.label,
                                             {&net->secret(id)}, nonce);
        op.locked = inputs;
        for (const auto& k : inputs) locked_coins_.insert(k);

        if (rng_.chance(w.double_spend_rate)) {
            // Deliberate conflicting twin: same inputs, fresh nonce, no lock.
            auto nonce2 = rng_.random_bytes(16);
            pending_op twin;
            twin.op = "spend";
            std::vector<fabcoin::output_spec> touts{{gathered, id}};
            twin.req = fabcoin::make_spend_request(inputs, std::move(touts), w.label,
                                                   {&net->secret(id)}, nonce2);
            twin.counts_inflight = false;
            twin.prop = endorse::build_proposal(net->secret(id), net->sc().fabcoin_id, "spend",
                                                {fabcoin::encode_request(twin.req)}, nonce2);
            net->metrics().count("double_spend_twins");
            submit(std::move(twin));
        }
    }
    op.prop = endorse::build_proposal(net->secret(id), net->sc().fabcoin_id, op.op,
                                      {fabcoin::encode_request(op.req)}, nonce);
    submit(std::move(op));
}

std::vector<std::string> client_node::choose_endorsers() {
    const auto& set = min_sets_[rng_.below(min_sets_.size())];
    std::vector<std::string> peers;
    for (const auto& token : set) {
        if (token.starts_with("org:")) {
            const auto& members = net->roster().org_peers.at(token.substr(4));
            peers.push_back(members[rng_.below(members.size())]);
        } else if (token.starts_with("id:")) {
            peers.push_back(token.substr(3));
        }
    }
    std::sort(peers.begin(), peers.end());
    peers.erase(std::unique(peers.begin(), peers.end()), peers.end());
    return peers;
}

void client_node::submit(pending_op op) {
    op.submit_us = net->now();
    op.asked = choose_endorsers();
    auto txid = op.prop.tx_id;
    for (const auto& p : op.asked) {
        net->send(id, p, proposal_msg{op.prop, id}, plane::control);
    }
    ops_.emplace(txid, std::move(op));
    arm_timeout(txid);
}

void client_node::resubmit(pending_op op) {
    for (const auto& k : op.locked) locked_coins_.erase(k);
    ++op.retries;
    auto nonce = rng_.random_bytes(16);
    if (op.op == "mint") {
        std::vector<const msp::signing_identity*> cbs;
        for (const auto& cb : net->roster().cb_ids) cbs.push_back(&net->secret(cb));
        op.req = fabcoin::make_mint_request(op.req.outputs, op.req.label, cbs, nonce);
        op.locked.clear();
    } else {
        // Inputs may have moved; re-plan the payment from the current view.
        std::uint64_t pay = 0;
        for (const auto& o : op.pay_outs) pay += o.amount;
        auto snap = net->peer(home_peer_)->snapshot();
        auto mine = fabcoin::coins_of(snap, net->sc().fabcoin_id, id);
        std::vector<std::string> inputs;
        std::uint64_t gathered = 0;
        for (const auto& [key, coin] : mine) {
            if (coin.label != op.req.label || locked_coins_.contains(key)) continue;
            inputs.push_back(key);
            gathered += coin.amount;
            if (gathered >= pay) break;
        }
        if (gathered < pay) {
            ++aborted_;
            maintain();
            return;
        }
        auto outs = op.pay_outs;
        if (gathered > pay) outs.push_back({gathered - pay, id});
        op.req = fabcoin::make_spend_request(inputs, std::move(outs), op.req.label,
                                             {&net->secret(id)}, nonce);
        op.locked = inputs;
        for (const auto& k : inputs) locked_coins_.insert(k);
    }
    op.prop = endorse::build_proposal(net->secret(id), net->sc().fabcoin_id, op.op,
                                      {fabcoin::encode_request(op.req)}, nonce);
    op.resps.clear();
    op.broadcasted = false;
    submit(std::move(op));
}

void client_node::arm_timeout(const hash256& txid) {
    net->queue().after(net->sc().workload.retry_timeout_us, [this, txid] {
        if (!up) return;
        auto it = ops_.find(txid);
        if (it == ops_.end()) return;
        auto& op = it->second;
        if (op.retries >= net->sc().workload.max_retries) {
            finish_op(txid);
            ++aborted_;
            maintain();
            return;
        }
        if (op.broadcasted) {
            // Confirmed-absence gate: never resubmit while the original may
            // still commit.
            net->send(id, home_peer_, query_txid_msg{txid, id}, plane::control);
            arm_timeout(txid);
        } else {
            auto copy = std::move(op);
            ops_.erase(it);
            resubmit(std::move(copy));
        }
    });
}

void client_node::try_assemble(pending_op& op) {
    try {
        auto tx = endorse::collect_and_assemble(op.prop, op.resps, policy_, net->msp());
        broadcast_tx(op, std::move(tx));
    } catch (const endorse::policy_unsatisfied&) {
        bool all_in = op.resps.size() >= op.asked.size();
        bool any_ok = std::any_of(op.resps.begin(), op.resps.end(), [](const auto& r) {
            return r.status == endorse::response_status::ok;
        });
        if (all_in && !any_ok) {
            // Simulation failed everywhere (e.g. stale inputs): give up now.
            finish_op(op.prop.tx_id);
            ++aborted_;
            maintain();
        }
        // Otherwise wait: more responses or the timeout will decide.
    }
}

void client_node::broadcast_tx(pending_op& op, core::transaction tx) {
    auto osn_id = "osn" + std::to_string(net->random_osn_pick(rng_));
    net->send(id, osn_id, broadcast_msg{std::move(tx), id}, plane::control);
    net->send(id, home_peer_, watch_txid_msg{op.prop.tx_id, id}, plane::control);
    op.broadcasted = true;
    net->register_submission(op.prop.tx_id, id, op.op, op.submit_us, op.retries);
    net->note_endorsed(op.prop.tx_id, net->now());
}

void client_node::finish_op(const hash256& txid) {
    auto it = ops_.find(txid);
    if (it == ops_.end()) return;
    for (const auto& k : it->second.locked) locked_coins_.erase(k);
    ops_.erase(it);
}

void client_node::handle(const message& m) {
    if (!up) return;
    if (const auto* r = std::get_if<proposal_resp_msg>(&m)) {
        auto it = ops_.find(r->resp.endo.tx_id);
        if (it == ops_.end() || it->second.broadcasted) return;
        it->second.resps.push_back(r->resp);
        try_assemble(it->second);
    } else if (const auto* br = std::get_if<broadcast_reject>(&m)) {
        finish_op(br->txid);
        ++aborted_;
        maintain();
    } else if (const auto* cn = std::get_if<commit_note>(&m)) {
        finish_op(cn->txid);
        maintain();
    } else if (const auto* st = std::get_if<txid_status_msg>(&m)) {
        auto it = ops_.find(st->txid);
        if (it == ops_.end()) return;
        if (st->found) {
            finish_op(st->txid);
            maintain();
        } else if (it->second.retries < net->sc().workload.max_retries) {
            auto copy = std::move(it->second);
            ops_.erase(it);
            resubmit(std::move(copy));
        } else {
            finish_op(st->txid);
            ++aborted_;
            maintain();
        }
    }
}

// ---------------------------------------------------------------- sim_net

sim_net::sim_net(scenario sc, std::optional<std::filesystem::path> rundir)
    : sc_(std::move(sc)),
      rundir_(std::move(rundir)),
      net_rng_(sim::derive_seed(sc_.seed, "net")),
      roster_(make_roster(sc_)) {
    cfg_.channel_id = sc_.channel;
    cfg_.batch_max_count = sc_.batch_max_count;
    cfg_.batch_max_bytes = sc_.batch_max_bytes;
    cfg_.batch_timeout_us = sc_.batch_timeout_us;
    cfg_.broadcast_allow = {"*"};
    cfg_.deliver_allow = {"*"};
    cfg_.config_payload = build_config_payload(sc_, roster_);
    genesis_ = order::make_genesis(cfg_, orderer_secret());

    registry_.install(sc_.channel, fabcoin::make_chaincode(sc_.fabcoin_id, default_policy(sc_)));
    vsccs_ = validate::make_vscc_registry();
    vsccs_.add("fabcoin", fabcoin::make_vscc({roster_.cb_ids, sc_.cb_threshold}));
    vctx_.msp = &roster_.msp;
    vctx_.registry = &registry_;
    vctx_.vsccs = &vsccs_;
    vctx_.channel = sc_.channel;
    vctx_.workers = sc_.validation_workers;

    observer_id_ = default_observer(sc_);
    if (rundir_) {
        std::filesystem::create_directories(*rundir_ / "peers");
    }

    for (std::uint32_t i = 0; i < sc_.osns; ++i) {
        auto id = "osn" + std::to_string(i);
        osns_.emplace(id, std::make_unique<osn_node>(this, id, i));
    }
    for (const auto& o : sc_.orgs) {
        const auto& peers = roster_.org_peers.at(o.name);
        for (const auto& pid : peers) {
            if (rundir_) std::filesystem::create_directories(*rundir_ / "peers" / pid);
            peers_.emplace(pid, std::make_unique<peer_node>(this, pid, o.name, pid == observer_id_));
        }
        const auto& clients = roster_.org_clients.at(o.name);
        for (std::size_t i = 0; i < clients.size(); ++i) {
            const auto& cid = clients[i];
            clients_.emplace(cid, std::make_unique<client_node>(this, cid, o.name,
                                                                peers[i % peers.size()]));
        }
    }
}

sim_net::~sim_net() = default;

std::optional<std::filesystem::path> sim_net::peer_dir(const std::string& peer_id) const {
    if (!rundir_) return std::nullopt;
    return *rundir_ / "peers" / peer_id;
}

peer_node* sim_net::peer(const std::string& id) {
    auto it = peers_.find(id);
    return it == peers_.end() ? nullptr : it->second.get();
}

client_node* sim_net::client(const std::string& id) {
    auto it = clients_.find(id);
    return it == clients_.end() ? nullptr : it->second.get();
}

node* sim_net::find_node(const std::string& id) {
    if (auto it = peers_.find(id); it != peers_.end()) return it->second.get();
    if (auto it = clients_.find(id); it != clients_.end()) return it->second.get();
    if (auto it = osns_.find(id); it != osns_.end()) return it->second.get();
    return nullptr;
}

bool sim_net::partitioned(const std::string& a, const std::string& b) const {
    for (const auto& p : partitions_) {
        if ((p.a.contains(a) && p.b.contains(b)) || (p.a.contains(b) && p.b.contains(a))) {
            return true;
        }
    }
    return false;
}

void sim_net::send(const std::string& from, const std::string& to, message m, plane pl) {
    if (partitioned(from, to)) return;
    if (pl == plane::gossip && net_rng_.chance(sc_.net.gossip_drop_rate)) return;
    auto lat = net_rng_.between(sc_.net.latency_min_us, sc_.net.latency_max_us);
    q_.after(lat, [this, to, m = std::move(m)] {
        auto* n = find_node(to);
        if (n == nullptr || !n->up) return;
        n->handle(m);
    });
}

void sim_net::append_entry(order::log_entry e) {
    log_.append(std::move(e));
    for (auto& [id, osn] : osns_) osn->notify_append();
}

void sim_net::on_block_cut(const core::block& b) {
    cut_time_.try_emplace(b.header.seq, q_.now());
}

std::uint64_t sim_net::cut_time(std::uint64_t seq) const {
    auto it = cut_time_.find(seq);
    return it == cut_time_.end() ? 0 : it->second;
}

void sim_net::register_submission(const hash256& txid, const std::string& client,
                                  const std::string& op, std::uint64_t submit_us,
                                  std::uint32_t retries) {
    auto& s = submissions_[txid];
    s.client = client;
    s.op = op;
    s.submit_us = submit_us;
    s.retries = retries;
    ++submitted_;
}

void sim_net::note_endorsed(const hash256& txid, std::uint64_t endorsed_us) {
    submissions_[txid].endorsed_us = endorsed_us;
}

void sim_net::observer_committed(const core::block& b, const std::vector<validate::tx_code>& codes,
                                 const block_metric& bm) {
    metrics_.blocks.push_back(bm);
    for (std::size_t i = 0; i < b.txs.size(); ++i) {
        if (b.txs[i].type != tx_type::normal) continue;
        ++app_committed_;
        metrics_.count(std::string("code_") + validate::tx_code_name(codes[i]));
        metrics_.count(codes[i] == validate::tx_code::valid ? "committed_valid"
                                                            : "committed_invalid");
        auto it = submissions_.find(b.txs[i].prop.tx_id);
        if (it != submissions_.end()) {
            tx_metric t;
            t.txid = b.txs[i].prop.tx_id;
            t.client = it->second.client;
            t.op = it->second.op;
            t.code = validate::tx_code_name(codes[i]);
            t.block_seq = b.header.seq;
            t.tx_index = static_cast<std::uint32_t>(i);
            t.retries = it->second.retries;
            t.submit_us = it->second.submit_us;
            t.endorsed_us = it->second.endorsed_us;
            t.ordered_us = bm.cut_us;
            t.val_start_us = bm.val_start_us;
            t.committed_us = bm.committed_us;
            metrics_.txs.push_back(t);
        }
    }
    if (!shutting_down_ && app_committed_ >= sc_.workload.target_tx) {
        shutting_down_ = true;
        timer_deadline_ = q_.now() + 10'000'000;
    }
}

bool sim_net::submissions_open() const { return !shutting_down_; }

bool sim_net::reschedule_timers() const {
    return !shutting_down_ || q_.now() < timer_deadline_;
}

std::string sim_net::assigned_osn(const std::string& org) const {
    std::uint32_t i = 0;
    for (const auto& o : sc_.orgs) {
        if (o.name == org) break;
        ++i;
    }
    return "osn" + std::to_string(i % sc_.osns);
}

std::uint32_t sim_net::random_osn_pick(sim::rng& r) const {
    return static_cast<std::uint32_t>(r.below(sc_.osns));
}

std::string sim_net::resolve_target(const std::string& target) const {
    if (target.starts_with("leader:")) {
        auto org = target.substr(7);
        std::vector<std::string> alive;
        auto it = roster_.org_peers.find(org);
        if (it == roster_.org_peers.end()) return "";
        for (const auto& pid : it->second) {
            auto pit = peers_.find(pid);
            if (pit != peers_.end() && pit->second->up) alive.push_back(pid);
        }
        return gossip::elect_leader(alive).value_or("");
    }
    return target;
}

void sim_net::apply_fault(const fault_spec& f) {
    if (f.kind == "crash_peer") {
        auto target = resolve_target(f.target);
        if (auto* p = peer(target)) p->crash();
    } else if (f.kind == "restart_peer") {
        auto target = resolve_target(f.target);
        if (auto* p = peer(target)) p->restart();
    } else if (f.kind == "crash_osn") {
        if (auto it = osns_.find(f.target); it != osns_.end()) it->second->crash();
    } else if (f.kind == "restart_osn") {
        if (auto it = osns_.find(f.target); it != osns_.end()) it->second->restart();
    } else if (f.kind == "partition") {
        active_partition ap;
        ap.name = f.name.empty() ? ("p" + std::to_string(partitions_.size())) : f.name;
        ap.a = std::set<std::string>(f.a.begin(), f.a.end());
        ap.b = std::set<std::string>(f.b.begin(), f.b.end());
        partitions_.push_back(std::move(ap));
    } else if (f.kind == "heal") {
        std::erase_if(partitions_, [&](const active_partition& p) {
            return f.name.empty() || p.name == f.name;
        });
    } else {
        throw bad_scenario("unknown fault kind: " + f.kind);
    }
}

net_result sim_net::run() {
    for (const auto& f : sc_.faults) {
        q_.at(f.at_us, [this, f] { apply_fault(f); });
    }
    for (auto& [id, p] : peers_) p->start();
    std::uint64_t i = 0;
    for (auto& [id, c] : clients_) {
        q_.at(1000 + i * 500, [cp = c.get()] { cp->start(); });
        ++i;
    }
    if (sc_.workload.target_tx == 0) {
        shutting_down_ = true;
        timer_deadline_ = 10'000'000;
    }

    net_result res;
    while (q_.step()) {
        if (q_.now() > sc_.max_sim_us) {
            res.hit_time_cap = true;
            break;
        }
    }
    res.sim_end_us = q_.now();
    res.target_met = app_committed_ >= sc_.workload.target_tx;
    res.submitted = submitted_;
    for (const auto& [id, c] : clients_) res.aborted_ops += c->aborted();
    metrics_.count("submitted", submitted_);
    metrics_.count("app_committed", app_committed_);
    metrics_.count("aborted_ops", res.aborted_ops);
    res.metrics = metrics_;
    return res;
}

}  // namespace evov::harness
