#include "harness/scenario.hpp"

#include <fstream>

#include "core/codec.hpp"
#include "json.hpp"

namespace evov::harness {

using nlohmann::json;

static void parse_org(const json& j, org_spec& o) {
    o.name = j.at("name").get<std::string>();
    o.peers = j.value("peers", o.peers);
    o.clients = j.value("clients", o.clients);
}

static void parse_fault(const json& j, fault_spec& f) {
    f.kind = j.at("kind").get<std::string>();
    f.at_us = j.value("at_us", f.at_us);
    f.target = j.value("target", f.target);
    f.a = j.value("a", f.a);
    f.b = j.value("b", f.b);
    f.name = j.value("name", f.name);
}

scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw bad_scenario(std::string("scenario parse: ") + e.what());
    }
    scenario sc;
    try {
        sc.name = j.value("name", sc.name);
        sc.seed = j.value("seed", sc.seed);
        sc.channel = j.value("channel", sc.channel);
        if (j.contains("orgs")) {
            sc.orgs.clear();
            for (const auto& jo : j.at("orgs")) {
                org_spec o;
                parse_org(jo, o);
                sc.orgs.push_back(std::move(o));
            }
        }
        sc.osns = j.value("osns", sc.osns);
        sc.cb_count = j.value("cb_count", sc.cb_count);
        sc.cb_threshold = j.value("cb_threshold", sc.cb_threshold);
        if (j.contains("batch")) {
            const auto& b = j.at("batch");
            sc.batch_max_count = b.value("max_count", sc.batch_max_count);
            sc.batch_max_bytes = b.value("max_bytes", sc.batch_max_bytes);
            sc.batch_timeout_us = b.value("timeout_us", sc.batch_timeout_us);
        }
        sc.endorsement_policy = j.value("endorsement_policy", sc.endorsement_policy);
        sc.fabcoin_id = j.value("fabcoin_id", sc.fabcoin_id);
        if (j.contains("workload")) {
            const auto& w = j.at("workload");
            auto& o = sc.workload;
            o.target_tx = w.value("target_tx", o.target_tx);
            o.inflight_per_client = w.value("inflight_per_client", o.inflight_per_client);
            o.spend_fraction = w.value("spend_fraction", o.spend_fraction);
            o.double_spend_rate = w.value("double_spend_rate", o.double_spend_rate);
            o.mint_amount = w.value("mint_amount", o.mint_amount);
            o.mint_outputs = w.value("mint_outputs", o.mint_outputs);
            o.label = w.value("label", o.label);
            o.retry_timeout_us = w.value("retry_timeout_us", o.retry_timeout_us);
            o.max_retries = w.value("max_retries", o.max_retries);
        }
        if (j.contains("net")) {
            const auto& n = j.at("net");
            sc.net.latency_min_us = n.value("latency_min_us", sc.net.latency_min_us);
            sc.net.latency_max_us = n.value("latency_max_us", sc.net.latency_max_us);
            sc.net.gossip_drop_rate = n.value("gossip_drop_rate", sc.net.gossip_drop_rate);
        }
        if (j.contains("gossip")) {
            const auto& g = j.at("gossip");
            sc.gossip.fanout = g.value("fanout", sc.gossip.fanout);
            sc.gossip.push_period_us = g.value("push_period_us", sc.gossip.push_period_us);
            sc.gossip.alive_period_us = g.value("alive_period_us", sc.gossip.alive_period_us);
            sc.gossip.suspect_timeout_us = g.value("suspect_timeout_us", sc.gossip.suspect_timeout_us);
            sc.gossip.buffer_capacity = g.value("buffer_capacity", sc.gossip.buffer_capacity);
        }
        if (j.contains("costs")) {
            const auto& c = j.at("costs");
            sc.costs.endorse_us = c.value("endorse_us", sc.costs.endorse_us);
            sc.costs.order_us = c.value("order_us", sc.costs.order_us);
            sc.costs.vscc_us = c.value("vscc_us", sc.costs.vscc_us);
            sc.costs.rw_us = c.value("rw_us", sc.costs.rw_us);
            sc.costs.ledger_us = c.value("ledger_us", sc.costs.ledger_us);
            sc.costs.block_commit_us = c.value("block_commit_us", sc.costs.block_commit_us);
        }
        sc.validation_workers = j.value("validation_workers", sc.validation_workers);
        sc.max_sim_us = j.value("max_sim_us", sc.max_sim_us);
        if (j.contains("faults")) {
            for (const auto& jf : j.at("faults")) {
                fault_spec f;
                parse_fault(jf, f);
                sc.faults.push_back(std::move(f));
            }
        }
        sc.observer = j.value("observer", sc.observer);
    } catch (const json::exception& e) {
        throw bad_scenario(std::string("scenario fields: ") + e.what());
    }
    if (sc.orgs.empty()) throw bad_scenario("scenario needs at least one org");
    for (const auto& o : sc.orgs) {
        if (o.peers == 0) throw bad_scenario("org without peers: " + o.name);
    }
    if (sc.osns == 0) throw bad_scenario("scenario needs at least one ordering node");
    if (sc.cb_count == 0 || sc.cb_threshold == 0 || sc.cb_threshold > sc.cb_count) {
        throw bad_scenario("invalid central-bank configuration");
    }
    if (sc.batch_max_count == 0 || sc.batch_max_bytes == 0) {
        throw bad_scenario("invalid batch limits");
    }
    return sc;
}

std::string scenario_to_json_text(const scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["channel"] = sc.channel;
    auto orgs = json::array();
    for (const auto& o : sc.orgs) {
        orgs.push_back(json{{"name", o.name}, {"peers", o.peers}, {"clients", o.clients}});
    }
    j["orgs"] = orgs;
    j["osns"] = sc.osns;
    j["cb_count"] = sc.cb_count;
    j["cb_threshold"] = sc.cb_threshold;
    j["batch"] = json{{"max_count", sc.batch_max_count},
                      {"max_bytes", sc.batch_max_bytes},
                      {"timeout_us", sc.batch_timeout_us}};
    j["endorsement_policy"] = sc.endorsement_policy;
    j["fabcoin_id"] = sc.fabcoin_id;
    j["workload"] = json{{"target_tx", sc.workload.target_tx},
                         {"inflight_per_client", sc.workload.inflight_per_client},
                         {"spend_fraction", sc.workload.spend_fraction},
                         {"double_spend_rate", sc.workload.double_spend_rate},
                         {"mint_amount", sc.workload.mint_amount},
                         {"mint_outputs", sc.workload.mint_outputs},
                         {"label", sc.workload.label},
                         {"retry_timeout_us", sc.workload.retry_timeout_us},
                         {"max_retries", sc.workload.max_retries}};
    j["net"] = json{{"latency_min_us", sc.net.latency_min_us},
                    {"latency_max_us", sc.net.latency_max_us},
                    {"gossip_drop_rate", sc.net.gossip_drop_rate}};
    j["gossip"] = json{{"fanout", sc.gossip.fanout},
                       {"push_period_us", sc.gossip.push_period_us},
                       {"alive_period_us", sc.gossip.alive_period_us},
                       {"suspect_timeout_us", sc.gossip.suspect_timeout_us},
                       {"buffer_capacity", sc.gossip.buffer_capacity}};
    j["costs"] = json{{"endorse_us", sc.costs.endorse_us},
                      {"order_us", sc.costs.order_us},
                      {"vscc_us", sc.costs.vscc_us},
                      {"rw_us", sc.costs.rw_us},
                      {"ledger_us", sc.costs.ledger_us},
                      {"block_commit_us", sc.costs.block_commit_us}};
    j["validation_workers"] = sc.validation_workers;
    j["max_sim_us"] = sc.max_sim_us;
    auto faults = json::array();
    for (const auto& f : sc.faults) {
        faults.push_back(json{{"kind", f.kind},
                              {"at_us", f.at_us},
                              {"target", f.target},
                              {"a", f.a},
                              {"b", f.b},
                              {"name", f.name}});
    }
    j["faults"] = faults;
    j["observer"] = sc.observer;
    return j.dump(2);
}

scenario load_scenario_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw bad_scenario("cannot open scenario file: " + p.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return scenario_from_json_text(text);
}

std::string default_policy(const scenario& sc) {
    if (!sc.endorsement_policy.empty()) return sc.endorsement_policy;
    if (sc.orgs.size() == 1) return "OR(org:" + sc.orgs[0].name + ")";
    std::string p = "OR(";
    for (std::size_t i = 0; i < sc.orgs.size(); ++i) {
        if (i) p += ", ";
        p += "org:" + sc.orgs[i].name;
    }
    p += ")";
    return p;
}

std::string default_observer(const scenario& sc) {
    if (!sc.observer.empty()) return sc.observer;
    return sc.orgs.front().name + ".peer0";
}

const msp::signing_identity& channel_roster::secret(const std::string& id) const {
    auto it = secrets.find(id);
    if (it == secrets.end()) throw msp::unknown_identity(id);
    return it->second;
}

std::array<std::uint8_t, 32> identity_key_seed(std::uint64_t root_seed, const std::string& id) {
    core::wire_writer w;
    w.u64(root_seed);
    w.str("key:" + id);
    return crypto::sha256(as_view(w.data()));
}

channel_roster make_roster(const scenario& sc) {
    channel_roster r;
    r.orderer_id = "orderer";
    auto gen = [&](const std::string& id, const std::string& org, msp::role role) {
        r.secrets.emplace(id, r.msp.generate(id, org, role, identity_key_seed(sc.seed, id)));
    };
    gen(r.orderer_id, "ordering", msp::role::orderer);
    for (const auto& o : sc.orgs) {
        for (std::uint32_t i = 0; i < o.peers; ++i) {
            auto id = o.name + ".peer" + std::to_string(i);
            gen(id, o.name, msp::role::peer);
            r.peer_ids.push_back(id);
            r.org_peers[o.name].push_back(id);
        }
        for (std::uint32_t i = 0; i < o.clients; ++i) {
            auto id = o.name + ".client" + std::to_string(i);
            gen(id, o.name, msp::role::client);
            r.org_clients[o.name].push_back(id);
        }
    }
    for (std::uint32_t i = 0; i < sc.cb_count; ++i) {
        auto id = "cb" + std::to_string(i);
        gen(id, "cb", msp::role::client);
        r.cb_ids.push_back(id);
    }
    return r;
}

bytes build_config_payload(const scenario& sc, const channel_roster& roster) {
    json j;
    j["channel"] = sc.channel;
    j["batch"] = json{{"max_count", sc.batch_max_count},
                      {"max_bytes", sc.batch_max_bytes},
                      {"timeout_us", sc.batch_timeout_us}};
    j["broadcast_allow"] = json::array({"*"});
    j["deliver_allow"] = json::array({"*"});
    j["orderer"] = roster.orderer_id;
    auto ids = json::array();
    for (const auto& [id, ident] : roster.msp.identities()) {
        ids.push_back(json{{"id", ident.id},
                           {"org", ident.org},
                           {"role", msp::role_name(ident.r)},
                           {"pubkey", to_hex(as_view(ident.public_key))}});
    }
    j["identities"] = ids;
    j["chaincodes"] = json::array(
        {json{{"id", sc.fabcoin_id}, {"policy", default_policy(sc)}, {"vscc", "fabcoin"}}});
    auto cbs = json::array();
    for (const auto& id : roster.cb_ids) cbs.push_back(id);
    j["fabcoin"] = json{{"cbs", cbs}, {"threshold", sc.cb_threshold}};
    j["gossip"] = json{{"fanout", sc.gossip.fanout},
                       {"push_period_us", sc.gossip.push_period_us},
                       {"alive_period_us", sc.gossip.alive_period_us},
                       {"suspect_timeout_us", sc.gossip.suspect_timeout_us},
                       {"buffer_capacity", sc.gossip.buffer_capacity}};
    return str_bytes(j.dump());
}

channel_setup setup_from_payload(byte_view payload) {
    json j;
    try {
        j = json::parse(bytes_str(payload));
    } catch (const json::exception& e) {
        throw bad_scenario(std::string("config payload parse: ") + e.what());
    }
    channel_setup s;
    try {
        s.cfg.channel_id = j.at("channel").get<std::string>();
        const auto& b = j.at("batch");
        s.cfg.batch_max_count = b.at("max_count").get<std::uint32_t>();
        s.cfg.batch_max_bytes = b.at("max_bytes").get<std::uint64_t>();
        s.cfg.batch_timeout_us = b.at("timeout_us").get<std::uint64_t>();
        s.cfg.broadcast_allow = j.at("broadcast_allow").get<std::vector<std::string>>();
        s.cfg.deliver_allow = j.at("deliver_allow").get<std::vector<std::string>>();
        s.cfg.config_payload = bytes(payload.begin(), payload.end());
        s.orderer_id = j.at("orderer").get<std::string>();
        for (const auto& ji : j.at("identities")) {
            msp::identity ident;
            ident.id = ji.at("id").get<std::string>();
            ident.org = ji.at("org").get<std::string>();
            ident.r = msp::role_from_name(ji.at("role").get<std::string>());
            ident.public_key = from_hex(ji.at("pubkey").get<std::string>());
            s.msp.add(std::move(ident));
        }
        const auto& cc = j.at("chaincodes").at(0);
        s.fabcoin_id = cc.at("id").get<std::string>();
        s.fabcoin_policy = cc.at("policy").get<std::string>();
        const auto& fc = j.at("fabcoin");
        s.cbs.cb_ids = fc.at("cbs").get<std::vector<std::string>>();
        s.cbs.threshold = fc.at("threshold").get<std::uint32_t>();
        const auto& g = j.at("gossip");
        s.gossip.fanout = g.at("fanout").get<std::uint32_t>();
        s.gossip.push_period_us = g.at("push_period_us").get<std::uint64_t>();
        s.gossip.alive_period_us = g.at("alive_period_us").get<std::uint64_t>();
        s.gossip.suspect_timeout_us = g.at("suspect_timeout_us").get<std::uint64_t>();
        s.gossip.buffer_capacity = g.at("buffer_capacity").get<std::uint32_t>();
    } catch (const json::exception& e) {
        throw bad_scenario(std::string("config payload fields: ") + e.what());
    }
    return s;
}

}  // namespace evov::harness
