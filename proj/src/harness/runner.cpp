#include "harness/runner.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace evov::harness {

using nlohmann::json;

bool run_report::all_passed() const {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

namespace {

struct auditor {
    std::vector<check_result> out;
    check_result cur;

    void begin(std::string name) { cur = {std::move(name), true, ""}; }
    void fail(const std::string& why) {
        if (cur.passed) cur.detail = why;  // keep the first failure
        cur.passed = false;
    }
    void note(const std::string& d) {
        if (cur.passed && cur.detail.empty()) cur.detail = d;
    }
    void end() { out.push_back(std::move(cur)); }
};

std::string seq_str(std::uint64_t seq) { return "block " + std::to_string(seq); }

// Every block signed by the ordering identity, hashes chained, seqs
// contiguous, bitmask attached and sized, genesis the only config carrier, no
// time-to-cut markers leaking through.
void check_chain_integrity(auditor& a, const ledger::block_ledger& led, const msp::identity& orderer) {
    a.begin("chain_integrity");
    hash256 prev{};
    auto h = led.height();
    for (std::uint64_t seq = 0; seq <= h; ++seq) {
        auto b = led.get_block(seq);
        if (b.header.seq != seq) {
            a.fail(seq_str(seq) + ": stored seq " + std::to_string(b.header.seq));
            break;
        }
        if (b.header.prev_hash != prev) {
            a.fail(seq_str(seq) + ": previous-hash link broken");
            break;
        }
        if (!order::verify_block_sig(b, orderer)) a.fail(seq_str(seq) + ": bad orderer signature");
        if (!b.metadata_bitmask ||
            b.metadata_bitmask->size() != (b.txs.size() + 7) / 8) {
            a.fail(seq_str(seq) + ": missing or missized validity bitmask");
        }
        for (const auto& tx : b.txs) {
            if (tx.type == core::tx_type::time_to_cut) a.fail(seq_str(seq) + ": time-to-cut marker in block");
            if ((tx.type == core::tx_type::config) != (seq == 0)) {
                a.fail(seq_str(seq) + ": config placement violated");
            }
        }
        if (seq == 0 && b.txs.size() != 1) a.fail("genesis must hold exactly the config transaction");
        if (seq > 0 && b.txs.empty()) a.fail(seq_str(seq) + ": empty block");
        prev = core::hash_block(b);
    }
    a.note("height " + std::to_string(h));
    a.end();
}

// Peers may trail (crash, partition) but must never diverge: every committed
// block equals the observer's byte for byte, bitmask included.
void check_peer_agreement(auditor& a, const sim_net& net, const ledger::block_ledger& obs) {
    a.begin("peer_agreement");
    auto oh = obs.height();
    std::size_t synced = 0;
    for (const auto& [pid, p] : net.peers()) {
        const auto& led = p->led();
        auto shared = std::min(led.height(), oh);
        for (std::uint64_t seq = 0; seq <= shared; ++seq) {
            if (led.get_block_bytes(seq) != obs.get_block_bytes(seq)) {
                a.fail(pid + " diverges at " + seq_str(seq));
                break;
            }
        }
        if (led.height() == oh) {
            ++synced;
            if (led.state_digest() != obs.state_digest()) a.fail(pid + ": state digest differs at equal height");
        }
    }
    a.note(std::to_string(synced) + "/" + std::to_string(net.peers().size()) +
           " peers at observer height " + std::to_string(oh));
    a.end();
}

// All ordering nodes consumed the same log, so their chains must be
// identical, and the peers' chain must be a prefix of it (modulo the
// commit-time metadata, hence hash comparison).
void check_osn_agreement(auditor& a, const sim_net& net, const ledger::block_ledger& obs) {
    a.begin("osn_agreement");
    const order::osn* first = nullptr;
    for (const auto& [oid, o] : net.osns()) {
        const auto& backend = o->backend();
        if (first == nullptr) {
            first = &backend;
            continue;
        }
        if (backend.chain_height() != first->chain_height()) {
            a.fail(oid + ": chain height differs across ordering nodes");
            continue;
        }
        for (std::uint64_t seq = 0; seq <= backend.chain_height(); ++seq) {
            if (core::hash_block(backend.block_at(seq)) != core::hash_block(first->block_at(seq))) {
                a.fail(oid + " differs at " + seq_str(seq));
                break;
            }
        }
    }
    if (first != nullptr) {
        if (obs.height() > first->chain_height()) {
            a.fail("observer chain longer than the ordered chain");
        } else {
            for (std::uint64_t seq = 0; seq <= obs.height(); ++seq) {
                if (core::hash_block(obs.get_block(seq)) != core::hash_block(first->block_at(seq))) {
                    a.fail("observer differs from ordered chain at " + seq_str(seq));
                    break;
                }
            }
            a.note("ordered height " + std::to_string(first->chain_height()));
        }
    }
    a.end();
}

// Re-validates the whole chain into a fresh in-memory ledger and demands the
// recorded verdicts and the final state fall out identically.
void check_revalidation(auditor& a, const sim_net& net, const ledger::block_ledger& obs) {
    a.begin("validation_reproducibility");
    auto replica = ledger::block_ledger::open({});
    replica.commit_block(obs.get_block(0), {true});
    for (std::uint64_t seq = 1; seq <= obs.height(); ++seq) {
        auto b = obs.get_block(seq);
        auto codes = validate::validate_block(net.vctx(), b, replica);
        for (std::size_t i = 0; i < codes.size(); ++i) {
            bool stored = core::bitmask_get(*b.metadata_bitmask, i);
            if (stored != (codes[i] == validate::tx_code::valid)) {
                a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": verdict not reproduced (re-run says " +
                       validate::tx_code_name(codes[i]) + ")");
            }
        }
        replica.commit_block(std::move(b), validate::codes_to_validity(codes));
        if (!a.cur.passed) break;
    }
    if (a.cur.passed && replica.state_digest() != obs.state_digest()) {
        a.fail("replayed state digest differs");
    }
    a.end();
}

// One-copy serializability: replaying the committed valid transactions one by
// one, each re-simulation must reproduce the recorded read-write set, and the
// end state must equal the observer's.
void check_serial_reexecution(auditor& a, const sim_net& net, const ledger::block_ledger& obs) {
    a.begin("serial_reexecution");
    ledger::state_map oracle;
    for (std::uint64_t seq = 1; seq <= obs.height(); ++seq) {
        auto b = obs.get_block(seq);
        for (std::size_t i = 0; i < b.txs.size(); ++i) {
            const auto& tx = b.txs[i];
            if (tx.type != core::tx_type::normal || !core::bitmask_get(*b.metadata_bitmask, i)) continue;
            ledger::state_snapshot snap(std::make_shared<ledger::state_map>(oracle), seq - 1);
            chaincode::sim_result sim;
            try {
                sim = chaincode::invoke_simulation(net.registry(), net.sc().channel,
                                                   tx.prop.chaincode_id, tx.prop.tx_id,
                                                   tx.prop.operation, tx.prop.args, snap);
            } catch (const std::exception& e) {
                a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": re-simulation threw: " + e.what());
                break;
            }
            if (!(sim.rwset == tx.rwset)) {
                a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": re-simulated read-write set differs");
                break;
            }
            for (const auto& en : tx.endorsements) {
                if (en.response != sim.response) {
                    a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": endorsed response differs");
                }
            }
            for (const auto& w : tx.rwset.writes) {
                if (w.kind == core::write_kind::del) {
                    oracle.erase(w.key);
                } else {
                    oracle[w.key] = {w.value, {seq, i}};
                }
            }
        }
        if (!a.cur.passed) break;
    }
    if (a.cur.passed && ledger::serialize_state(oracle) != obs.state_bytes()) {
        a.fail("serially replayed state differs from committed state");
    }
    a.end();
}

// Coin-level audit over the valid schedule: a coin is created once, consumed
// at most once, value never inflates, and live value equals mint minus burn.
// The surviving coin set must match the committed state exactly.
void check_coin_conservation(auditor& a, const sim_net& net, const ledger::block_ledger& obs) {
    a.begin("coin_conservation");
    const auto& cc = net.sc().fabcoin_id;
    std::string ns = cc;
    ns.push_back('\0');

    std::map<std::string, std::uint64_t> live;  // namespaced coin key -> amount
    std::uint64_t minted = 0, burned = 0, spends = 0, mints = 0;
    for (std::uint64_t seq = 1; seq <= obs.height() && a.cur.passed; ++seq) {
        auto b = obs.get_block(seq);
        for (std::size_t i = 0; i < b.txs.size(); ++i) {
            const auto& tx = b.txs[i];
            if (tx.type != core::tx_type::normal || !core::bitmask_get(*b.metadata_bitmask, i)) continue;
            if (tx.prop.chaincode_id != cc) continue;
            std::uint64_t in = 0, out = 0;
            bool has_del = false;
            for (const auto& w : tx.rwset.writes) {
                if (w.kind != core::write_kind::del) continue;
                has_del = true;
                auto it = live.find(w.key);
                if (it == live.end()) {
                    a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": spends a coin that is not live");
                    break;
                }
                in += it->second;
                live.erase(it);
            }
            for (const auto& w : tx.rwset.writes) {
                if (w.kind != core::write_kind::put) continue;
                if (live.contains(w.key)) {
                    a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": re-creates coin " + w.key);
                    break;
                }
                std::uint64_t amt = 0;
                try {
                    amt = fabcoin::decode_coin(as_view(w.value)).amount;
                } catch (const std::exception&) {
                    a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": committed coin fails to decode");
                    break;
                }
                out += amt;
                live.emplace(w.key, amt);
            }
            if (!a.cur.passed) break;
            if (has_del) {
                ++spends;
                if (out > in) {
                    a.fail(seq_str(seq) + " tx " + std::to_string(i) + ": spend inflates value");
                    break;
                }
                burned += in - out;
            } else {
                ++mints;
                minted += out;
            }
        }
    }

    std::uint64_t live_total = 0;
    for (const auto& [k, amt] : live) live_total += amt;
    if (a.cur.passed && live_total != minted - burned) {
        a.fail("live value " + std::to_string(live_total) + " != minted " + std::to_string(minted) +
               " - burned " + std::to_string(burned));
    }

    std::string ns_end = cc;
    ns_end.push_back('\x01');
    auto coins = obs.snapshot().range(ns, ns_end);
    if (a.cur.passed && coins.size() != live.size()) {
        a.fail("committed coin count " + std::to_string(coins.size()) + " != audited " +
               std::to_string(live.size()));
    }
    if (a.cur.passed) {
        for (const auto& [key, entry] : coins) {
            auto it = live.find(key);
            std::uint64_t amt = 0;
            try {
                amt = fabcoin::decode_coin(as_view(entry.value)).amount;
            } catch (const std::exception&) {
                a.fail("committed coin fails to decode: " + key);
                break;
            }
            if (it == live.end() || it->second != amt) {
                a.fail("committed coin set differs at " + key);
                break;
            }
        }
    }
    a.note(std::to_string(mints) + " mints, " + std::to_string(spends) + " spends, " +
           std::to_string(live.size()) + " live coins worth " + std::to_string(live_total));
    a.end();
}

// The ordering service invents nothing: every application transaction in the
// chain was submitted by some client, and no valid txid commits twice.
void check_no_creation(auditor& a, const sim_net& net, const ledger::block_ledger& obs) {
    a.begin("no_creation");
    std::set<hash256> valid_seen;
    std::uint64_t total = 0;
    for (std::uint64_t seq = 1; seq <= obs.height(); ++seq) {
        auto b = obs.get_block(seq);
        for (std::size_t i = 0; i < b.txs.size(); ++i) {
            const auto& tx = b.txs[i];
            if (tx.type != core::tx_type::normal) continue;
            ++total;
            if (!net.submissions().contains(tx.prop.tx_id)) {
                a.fail(seq_str(seq) + ": committed txid was never submitted: " + to_hex(tx.prop.tx_id));
            }
            if (core::bitmask_get(*b.metadata_bitmask, i) && !valid_seen.insert(tx.prop.tx_id).second) {
                a.fail("txid committed valid twice: " + to_hex(tx.prop.tx_id));
            }
        }
    }
    a.note(std::to_string(total) + " committed of " + std::to_string(net.submissions().size()) +
           " submitted");
    a.end();
}

// Per-transaction stages must be monotone and telescope into the end-to-end
// latency; per-block spans must add up to the validation interval; the rows
// must reconcile with the counters.
void check_metrics(auditor& a, const net_result& res) {
    a.begin("metrics_consistency");
    const auto& m = res.metrics;
    for (const auto& t : m.txs) {
        bool monotone = t.submit_us <= t.endorsed_us && t.endorsed_us <= t.ordered_us &&
                        t.ordered_us <= t.val_start_us && t.val_start_us <= t.committed_us;
        if (!monotone) {
            a.fail("stage timestamps not monotone for " + to_hex(t.txid));
            break;
        }
        if (t.endorse_lat() + t.order_lat() + t.validate_lat() != t.e2e_lat()) {
            a.fail("stage latencies do not telescope for " + to_hex(t.txid));
            break;
        }
    }
    std::uint64_t prev_seq = 0;
    std::uint64_t rows_valid = 0, rows_txs = 0;
    for (const auto& b : m.blocks) {
        if (b.seq != prev_seq + 1) {
            a.fail("block rows skip from " + std::to_string(prev_seq) + " to " + std::to_string(b.seq));
            break;
        }
        prev_seq = b.seq;
        rows_valid += b.valid;
        rows_txs += b.txs;
        bool monotone = b.cut_us <= b.received_us && b.received_us <= b.val_start_us &&
                        b.val_start_us <= b.committed_us;
        if (!monotone) {
            a.fail(seq_str(b.seq) + ": block timestamps not monotone");
            break;
        }
        if (b.committed_us - b.val_start_us != b.vscc_span_us + b.rw_span_us + b.ledger_span_us) {
            a.fail(seq_str(b.seq) + ": validation spans do not cover the interval");
            break;
        }
    }
    auto counter = [&](const char* k) {
        auto it = m.counters.find(k);
        return it == m.counters.end() ? std::uint64_t{0} : it->second;
    };
    if (rows_valid != counter("committed_valid")) a.fail("valid counts disagree between blocks and counters");
    if (rows_txs != counter("app_committed")) a.fail("tx counts disagree between blocks and counters");
    if (m.txs.size() != counter("app_committed")) a.fail("per-tx rows missing for committed transactions");
    a.note(std::to_string(m.txs.size()) + " tx rows, " + std::to_string(m.blocks.size()) + " block rows");
    a.end();
}

void check_outcome(auditor& a, const scenario& sc, const net_result& res) {
    a.begin("workload_outcome");
    if (res.hit_time_cap) a.fail("hit the simulated time cap");
    if (sc.workload.target_tx > 0 && !res.target_met) a.fail("committed fewer transactions than targeted");
    auto twins = res.metrics.counters.contains("double_spend_twins")
                     ? res.metrics.counters.at("double_spend_twins")
                     : 0;
    auto invalid = res.metrics.counters.contains("committed_invalid")
                       ? res.metrics.counters.at("committed_invalid")
                       : 0;
    if (twins > 0 && invalid == 0) {
        a.fail(std::to_string(twins) + " conflicting twins submitted but no transaction was invalidated");
    }
    a.note("committed " + std::to_string(res.metrics.counters.contains("app_committed")
                                             ? res.metrics.counters.at("app_committed")
                                             : 0) +
           ", twins " + std::to_string(twins) + ", invalid " + std::to_string(invalid));
    a.end();
}

}  // namespace

run_report run_scenario(const scenario& sc, std::optional<std::filesystem::path> rundir) {
    if (rundir) {
        // A reused run directory would hand peers a previous run's chain.
        std::filesystem::remove_all(*rundir / "peers");
        std::filesystem::create_directories(*rundir);
    }
    sim_net net(sc, rundir);
    run_report r;
    r.scenario_name = sc.name;
    r.seed = sc.seed;
    r.net = net.run();

    const auto& obs = net.peers().at(net.observer_id())->led();
    r.chain_height = obs.height();

    auditor a;
    check_chain_integrity(a, obs, net.msp().require(net.roster().orderer_id));
    check_peer_agreement(a, net, obs);
    check_osn_agreement(a, net, obs);
    check_revalidation(a, net, obs);
    check_serial_reexecution(a, net, obs);
    check_coin_conservation(a, net, obs);
    check_no_creation(a, net, obs);
    check_metrics(a, r.net);
    check_outcome(a, sc, r.net);
    r.checks = std::move(a.out);

    hash256 d{};
    for (std::uint64_t seq = 0; seq <= obs.height(); ++seq) {
        auto bb = obs.get_block_bytes(seq);
        d = crypto::sha256_concat({as_view(d), as_view(bb)});
    }
    r.chain_digest = d;
    r.state_digest = obs.state_digest();
    r.run_digest = crypto::sha256_concat({as_view(r.chain_digest), as_view(r.state_digest)});

    if (rundir) {
        write_tx_csv(*rundir / "metrics.csv", r.net.metrics.txs);
        write_block_csv(*rundir / "blocks.csv", r.net.metrics.blocks);
        std::ofstream sf(*rundir / "scenario.json", std::ios::binary);
        sf << scenario_to_json_text(sc) << '\n';
        std::ofstream rf(*rundir / "report.json", std::ios::binary);
        rf << report_to_json_text(r) << '\n';
    }
    return r;
}

std::string report_to_json_text(const run_report& r) {
    json j;
    j["scenario"] = r.scenario_name;
    j["seed"] = r.seed;
    j["target_met"] = r.net.target_met;
    j["hit_time_cap"] = r.net.hit_time_cap;
    j["sim_end_us"] = r.net.sim_end_us;
    j["submitted"] = r.net.submitted;
    j["aborted_ops"] = r.net.aborted_ops;
    j["chain_height"] = r.chain_height;
    j["chain_digest"] = to_hex(r.chain_digest);
    j["state_digest"] = to_hex(r.state_digest);
    j["run_digest"] = to_hex(r.run_digest);
    j["counters"] = json::object();
    for (const auto& [k, v] : r.net.metrics.counters) j["counters"][k] = v;
    j["checks"] = json::array();
    for (const auto& c : r.checks) {
        j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    j["all_passed"] = r.all_passed();

    auto stages = collect_stage_samples(r.net.metrics);
    auto put_summary = [&](const char* key, const std::vector<double>& v) {
        auto s = summarize_latencies(v);
        json js{{"count", s.count}, {"mean_us", s.mean}, {"min_us", s.min}, {"max_us", s.max}};
        if (s.p50) js["p50_us"] = *s.p50;
        if (s.p95) js["p95_us"] = *s.p95;
        if (s.p99) js["p99_us"] = *s.p99;
        j["latency"][key] = js;
    };
    put_summary("e2e", stages.e2e);
    put_summary("endorse", stages.endorse);
    put_summary("order", stages.order);
    put_summary("validate", stages.validate);
    put_summary("vscc", stages.vscc);
    put_summary("rw", stages.rw);
    put_summary("ledger", stages.ledger);
    if (r.net.sim_end_us > 0 && !stages.e2e.empty()) {
        j["throughput_tps"] =
            static_cast<double>(stages.e2e.size()) * 1e6 / static_cast<double>(r.net.sim_end_us);
    }
    return j.dump(2);
}

}  // namespace evov::harness
