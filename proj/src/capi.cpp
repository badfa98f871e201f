#include "evov/evov.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>

#include "harness/bench.hpp"
#include "harness/runner.hpp"
#include "harness/verify.hpp"
#include "json.hpp"

using namespace evov;
using nlohmann::json;

namespace {

thread_local std::string t_last_error;

evov_status fail(evov_status st, const std::string& msg) {
    t_last_error = msg;
    return st;
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p != nullptr) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

evov_status deliver(char** out, const std::string& s, evov_status st = EVOV_OK) {
    if (out != nullptr) {
        *out = dup_string(s);
        if (*out == nullptr) return fail(EVOV_ERR_INTERNAL, "out of memory");
    }
    t_last_error.clear();
    return st;
}

// Maps the library's exception families onto the C status space.
evov_status classify(const std::exception& e) {
    if (dynamic_cast<const harness::bad_scenario*>(&e) != nullptr) return EVOV_ERR_INPUT;
    if (dynamic_cast<const core::codec_error*>(&e) != nullptr) return EVOV_ERR_INPUT;
    if (dynamic_cast<const ledger::fatal_corruption*>(&e) != nullptr) return EVOV_ERR_INPUT;
    if (dynamic_cast<const fabcoin::insufficient_funds*>(&e) != nullptr) return EVOV_ERR_APP;
    if (dynamic_cast<const fabcoin::bad_request*>(&e) != nullptr) return EVOV_ERR_APP;
    if (dynamic_cast<const chaincode::simulation_failed*>(&e) != nullptr) return EVOV_ERR_APP;
    if (dynamic_cast<const order::access_denied*>(&e) != nullptr) return EVOV_ERR_APP;
    if (dynamic_cast<const order::oversized_transaction*>(&e) != nullptr) return EVOV_ERR_APP;
    if (dynamic_cast<const msp::unknown_identity*>(&e) != nullptr) return EVOV_ERR_ARGUMENT;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) return EVOV_ERR_IO;
    if (dynamic_cast<const std::ios_base::failure*>(&e) != nullptr) return EVOV_ERR_IO;
    return EVOV_ERR_INTERNAL;
}

}  // namespace

extern "C" {

const char* evov_version(void) { return "1.0.0"; }

const char* evov_last_error(void) { return t_last_error.c_str(); }

void evov_string_free(char* s) { std::free(s); }

evov_status evov_run_scenario(const char* scenario_path, const char* rundir, char** out) {
    if (scenario_path == nullptr || out == nullptr) return fail(EVOV_ERR_ARGUMENT, "null argument");
    try {
        auto sc = harness::load_scenario_file(scenario_path);
        std::optional<std::filesystem::path> dir;
        if (rundir != nullptr) dir = std::filesystem::path(rundir);
        auto report = harness::run_scenario(sc, dir);
        auto st = report.all_passed() ? EVOV_OK : EVOV_ERR_CHECK;
        auto rc = deliver(out, harness::report_to_json_text(report), st);
        if (st == EVOV_ERR_CHECK && rc == st) t_last_error = "run finished but an audit check failed";
        return rc;
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
}

evov_status evov_bench_run(const char* matrix_path, const char* out_dir, char** out) {
    if (matrix_path == nullptr || out == nullptr) return fail(EVOV_ERR_ARGUMENT, "null argument");
    try {
        auto m = harness::load_matrix_file(matrix_path);
        std::optional<std::filesystem::path> dir;
        if (out_dir != nullptr) dir = std::filesystem::path(out_dir);
        auto report = harness::run_bench(m, dir);
        auto st = report.all_passed ? EVOV_OK : EVOV_ERR_CHECK;
        auto rc = deliver(out, harness::bench_report_to_json_text(report), st);
        if (st == EVOV_ERR_CHECK && rc == st) t_last_error = "a benchmark cell failed its run audit";
        return rc;
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
}

evov_status evov_verify_run(const char* dir, char** out) {
    if (dir == nullptr || out == nullptr) return fail(EVOV_ERR_ARGUMENT, "null argument");
    try {
        auto report = harness::verify_rundir(dir);
        auto st = report.ok() ? EVOV_OK : EVOV_ERR_CHECK;
        auto rc = deliver(out, harness::verify_report_to_json_text(report), st);
        if (st == EVOV_ERR_CHECK && rc == st) {
            t_last_error = "verification found " + std::to_string(report.findings.size()) + " defect(s)";
        }
        return rc;
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
}

}  // extern "C"

// ------------------------------------------------------------ persistent net

struct evov_net {
    std::filesystem::path dir;
    harness::scenario sc;
    harness::channel_roster roster;
    order::channel_config cfg;
    chaincode::chaincode_registry registry;
    validate::vscc_registry vsccs;
    validate::validation_context vctx;
    endorse::endorsement_policy policy;
    endorse::nonce_cache nonces;
    std::vector<std::string> users;
    std::optional<ledger::block_ledger> led;

    const msp::signing_identity& secret(const std::string& id) const { return roster.secret(id); }
    const std::string& peer_id() const { return roster.peer_ids.front(); }
};

namespace {

constexpr std::uint64_t default_net_seed = 1;

harness::channel_roster net_roster(std::uint64_t seed, const std::vector<std::string>& users) {
    harness::channel_roster r;
    r.orderer_id = "orderer";
    auto gen = [&](const std::string& id, const std::string& org, msp::role role) {
        r.secrets.emplace(id, r.msp.generate(id, org, role, harness::identity_key_seed(seed, id)));
    };
    gen(r.orderer_id, "ordering", msp::role::orderer);
    gen("peer0", "bank", msp::role::peer);
    r.peer_ids.push_back("peer0");
    r.org_peers["bank"].push_back("peer0");
    for (const auto& u : users) {
        gen(u, "bank", msp::role::client);
        r.org_clients["bank"].push_back(u);
    }
    gen("cb0", "cb", msp::role::client);
    r.cb_ids.push_back("cb0");
    return r;
}

harness::scenario net_scenario(std::uint64_t seed) {
    harness::scenario sc;
    sc.name = "net";
    sc.seed = seed;
    sc.orgs = {{"bank", 1, 0}};
    sc.osns = 1;
    sc.cb_count = 1;
    sc.cb_threshold = 1;
    sc.batch_max_count = 1;  // every transaction commits in its own block
    return sc;
}

// Unique per call: the chain head moves on every committed operation.
bytes next_nonce(const evov_net& n, const std::string& who) {
    core::wire_writer w;
    w.str(who);
    w.hash(n.led->last_hash());
    w.u64(n.led->height());
    auto h = crypto::sha256(as_view(w.data()));
    return bytes(h.begin(), h.begin() + 16);
}

void open_net(evov_net& n) {
    std::filesystem::create_directories(n.dir);
    auto ks_path = n.dir / "keystore.json";
    std::uint64_t seed = default_net_seed;
    n.users = {"alice", "bob", "carol"};
    if (std::filesystem::exists(ks_path)) {
        std::ifstream f(ks_path, std::ios::binary);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        json j;
        try {
            j = json::parse(text);
            seed = j.at("seed").get<std::uint64_t>();
            n.users = j.at("users").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            throw harness::bad_scenario(std::string("keystore unreadable: ") + e.what());
        }
    } else {
        json j{{"seed", seed}, {"users", n.users}};
        std::ofstream f(ks_path, std::ios::binary);
        if (!f) throw harness::bad_scenario("cannot write " + ks_path.string());
        f << j.dump(2) << '\n';
    }

    n.sc = net_scenario(seed);
    n.roster = net_roster(seed, n.users);
    auto payload = harness::build_config_payload(n.sc, n.roster);
    auto setup = harness::setup_from_payload(as_view(payload));
    n.cfg = setup.cfg;
    n.policy = endorse::parse_policy(harness::default_policy(n.sc));
    n.registry.install(n.cfg.channel_id,
                       fabcoin::make_chaincode(n.sc.fabcoin_id, harness::default_policy(n.sc)));
    n.vsccs = validate::make_vscc_registry();
    n.vsccs.add("fabcoin", fabcoin::make_vscc({n.roster.cb_ids, n.sc.cb_threshold}));
    n.vctx = {&n.roster.msp, &n.registry, &n.vsccs, n.cfg.channel_id, 0};

    auto genesis = order::make_genesis(n.cfg, n.secret(n.roster.orderer_id));
    n.led = ledger::block_ledger::open({n.dir / "ledger", 16});
    if (n.led->empty()) {
        n.led->commit_block(genesis, {true});
    } else {
        auto stored = n.led->get_block(0);
        if (stored.txs.size() != 1 || stored.txs[0].prop.args.size() != 1 ||
            stored.txs[0].prop.args[0] != payload) {
            throw harness::bad_scenario("stored chain was not created from this keystore");
        }
    }
}

void require_user(const evov_net& n, const std::string& id) {
    const auto* ident = n.roster.msp.find(id);
    if (ident == nullptr || ident->r != msp::role::client || ident->org != "bank") {
        throw msp::unknown_identity(id);
    }
}

// The full pipeline, synchronously: endorse, admit, cut a one-tx block, sign,
// validate, commit.
json run_op(evov_net& n, const std::string& client, const std::string& operation,
            const fabcoin::request& req, const bytes& nonce) {
    auto prop = endorse::build_proposal(n.secret(client), n.sc.fabcoin_id, operation,
                                        {fabcoin::encode_request(req)}, nonce);
    endorse::endorser_context ectx{&n.roster.msp, &n.registry, n.cfg.channel_id,
                                   &n.secret(n.peer_id()), &n.nonces, {}};
    auto resp = endorse::endorse_proposal(ectx, prop, n.led->snapshot());
    if (resp.status != endorse::response_status::ok) {
        throw chaincode::simulation_failed(resp.message);
    }
    auto tx = endorse::collect_and_assemble(prop, {resp}, n.policy, n.roster.msp);
    order::check_broadcast(n.cfg, n.roster.msp, tx, core::encoded_size(tx));

    core::block b;
    b.header.seq = n.led->height() + 1;
    b.header.prev_hash = n.led->last_hash();
    b.txs.push_back(std::move(tx));
    b.orderer_sig = order::sign_block(b, n.secret(n.roster.orderer_id));

    auto codes = validate::validate_block(n.vctx, b, *n.led);
    n.led->commit_block(b, validate::codes_to_validity(codes));

    json out;
    out["txid"] = to_hex(prop.tx_id);
    out["block_seq"] = b.header.seq;
    out["code"] = validate::tx_code_name(codes[0]);
    out["valid"] = codes[0] == validate::tx_code::valid;
    return out;
}

}  // namespace

extern "C" {

evov_status evov_net_open(const char* dir, evov_net** out) {
    if (dir == nullptr || out == nullptr) return fail(EVOV_ERR_ARGUMENT, "null argument");
    auto n = std::make_unique<evov_net>();
    n->dir = dir;
    try {
        open_net(*n);
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
    *out = n.release();
    t_last_error.clear();
    return EVOV_OK;
}

void evov_net_close(evov_net* n) { delete n; }

evov_status evov_net_mint(evov_net* n, const char* owner, uint64_t amount, uint32_t outputs,
                          const char* label, char** out) {
    if (n == nullptr || owner == nullptr || label == nullptr || out == nullptr) {
        return fail(EVOV_ERR_ARGUMENT, "null argument");
    }
    try {
        require_user(*n, owner);
        if (amount == 0) throw fabcoin::bad_request("mint amount must be positive");
        if (outputs == 0) outputs = 1;
        outputs = std::min<std::uint64_t>(outputs, amount);
        std::vector<fabcoin::output_spec> outs;
        for (std::uint32_t j = 0; j < outputs; ++j) {
            std::uint64_t share = amount / outputs + (j < amount % outputs ? 1 : 0);
            outs.push_back({share, owner});
        }
        auto nonce = next_nonce(*n, owner);
        std::vector<const msp::signing_identity*> cbs;
        for (const auto& id : n->roster.cb_ids) cbs.push_back(&n->secret(id));
        auto req = fabcoin::make_mint_request(std::move(outs), label, cbs, nonce);
        return deliver(out, run_op(*n, owner, "mint", req, nonce).dump(2));
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
}

evov_status evov_net_spend(evov_net* n, const char* from, const char* to, uint64_t amount,
                           const char* label, char** out) {
    if (n == nullptr || from == nullptr || to == nullptr || label == nullptr || out == nullptr) {
        return fail(EVOV_ERR_ARGUMENT, "null argument");
    }
    try {
        require_user(*n, from);
        require_user(*n, to);
        if (amount == 0) throw fabcoin::bad_request("spend amount must be positive");
        auto snap = n->led->snapshot();
        auto plan = fabcoin::plan_spend(snap, n->sc.fabcoin_id, from, label, amount);
        std::vector<fabcoin::output_spec> outs{{amount, to}};
        if (plan.change > 0) outs.push_back({plan.change, from});
        auto nonce = next_nonce(*n, from);
        auto req = fabcoin::make_spend_request(std::move(plan.inputs), std::move(outs), label,
                                               {&n->secret(from)}, nonce);
        return deliver(out, run_op(*n, from, "spend", req, nonce).dump(2));
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
}

evov_status evov_net_balance(evov_net* n, const char* owner, const char* label, char** out) {
    if (n == nullptr || owner == nullptr || label == nullptr || out == nullptr) {
        return fail(EVOV_ERR_ARGUMENT, "null argument");
    }
    try {
        require_user(*n, owner);
        auto snap = n->led->snapshot();
        json j;
        j["owner"] = owner;
        j["label"] = label;
        j["balance"] = fabcoin::balance_of(snap, n->sc.fabcoin_id, owner, label);
        j["coins"] = json::array();
        for (const auto& [key, coin] : fabcoin::coins_of(snap, n->sc.fabcoin_id, owner)) {
            if (coin.label != label) continue;
            j["coins"].push_back({{"key", key}, {"amount", coin.amount}});
        }
        j["height"] = n->led->height();
        return deliver(out, j.dump(2));
    } catch (const std::exception& e) {
        return fail(classify(e), e.what());
    }
}

}  // extern "C"
