#include "harness/verify.hpp"

#include <algorithm>

#include "harness/scenario.hpp"
#include "json.hpp"
#include "validate/validate.hpp"

namespace evov::harness {

using nlohmann::json;

namespace {

struct scanned_chain {
    std::vector<bytes> payloads;   // raw stored records, one per block
    std::vector<core::block> blocks;
};

// Scans and decodes one ledger file; structural defects (torn records, bad
// decode, broken linkage) end the usable chain at the defect.
scanned_chain load_chain(const std::filesystem::path& dir, const std::string& peer,
                         std::vector<verify_finding>& findings) {
    scanned_chain out;
    auto file = dir / "blocks.dat";
    if (!std::filesystem::exists(file)) {
        findings.push_back({peer, "missing_file", 0, -1, file.string()});
        return out;
    }
    auto rec = ledger::record_file::open(file);
    auto scan = rec.scan();
    if (scan.torn_tail) {
        findings.push_back({peer, "torn_record", scan.payloads.size(), -1,
                            "intact data ends at byte " + std::to_string(scan.good_end)});
    }
    hash256 prev{};
    for (std::size_t i = 0; i < scan.payloads.size(); ++i) {
        core::block b;
        try {
            b = core::decode_block_bytes(as_view(scan.payloads[i]));
        } catch (const std::exception& e) {
            findings.push_back({peer, "undecodable_block", i, -1, e.what()});
            return out;
        }
        if (b.header.seq != i) {
            findings.push_back({peer, "sequence_gap", i, -1,
                                "stored seq " + std::to_string(b.header.seq)});
            return out;
        }
        if (b.header.prev_hash != prev) {
            findings.push_back({peer, "hash_chain_broken", i, -1, "previous-hash link does not match"});
            return out;
        }
        if (!b.metadata_bitmask || b.metadata_bitmask->size() != (b.txs.size() + 7) / 8) {
            findings.push_back({peer, "bad_bitmask", i, -1, "missing or missized validity bitmask"});
            return out;
        }
        prev = core::hash_block(b);
        out.payloads.push_back(scan.payloads[i]);
        out.blocks.push_back(std::move(b));
    }
    return out;
}

}  // namespace

verify_report verify_ledger_dir(const std::filesystem::path& dir, const std::string& peer_name) {
    verify_report r;
    peer_verify pv;
    pv.peer = peer_name;

    auto chain = load_chain(dir, peer_name, r.findings);
    pv.blocks = chain.blocks.size();
    if (chain.blocks.empty()) {
        if (r.findings.empty()) r.findings.push_back({peer_name, "empty_chain", 0, -1, "no blocks"});
        pv.ok = false;
        r.peers.push_back(std::move(pv));
        return r;
    }

    // Everything needed to judge the chain comes from the genesis config.
    const auto& genesis = chain.blocks[0];
    channel_setup setup;
    try {
        if (genesis.txs.size() != 1 || genesis.txs[0].type != core::tx_type::config ||
            genesis.txs[0].prop.args.size() != 1) {
            throw bad_scenario("genesis does not carry exactly one config transaction");
        }
        setup = setup_from_payload(as_view(genesis.txs[0].prop.args[0]));
    } catch (const std::exception& e) {
        r.findings.push_back({peer_name, "bad_genesis", 0, -1, e.what()});
        pv.ok = false;
        r.peers.push_back(std::move(pv));
        return r;
    }

    chaincode::chaincode_registry registry;
    registry.install(setup.cfg.channel_id,
                     fabcoin::make_chaincode(setup.fabcoin_id, setup.fabcoin_policy));
    auto vsccs = validate::make_vscc_registry();
    vsccs.add("fabcoin", fabcoin::make_vscc(setup.cbs));
    validate::validation_context vctx{&setup.msp, &registry, &vsccs, setup.cfg.channel_id, 0};

    const msp::identity* orderer = setup.msp.find(setup.orderer_id);
    if (orderer == nullptr) {
        r.findings.push_back({peer_name, "bad_genesis", 0, -1,
                              "ordering identity missing from config: " + setup.orderer_id});
    }

    auto replica = ledger::block_ledger::open({});
    hash256 digest{};
    for (std::size_t seq = 0; seq < chain.blocks.size(); ++seq) {
        const auto& b = chain.blocks[seq];
        if (orderer != nullptr && !order::verify_block_sig(b, *orderer)) {
            r.findings.push_back({peer_name, "bad_orderer_sig", seq, -1, "signature does not verify"});
        }
        for (std::size_t i = 0; i < b.txs.size(); ++i) {
            if (b.txs[i].type == core::tx_type::time_to_cut) {
                r.findings.push_back({peer_name, "cut_marker_in_block", seq,
                                      static_cast<std::int64_t>(i), "time-to-cut marker committed"});
            }
            if ((b.txs[i].type == core::tx_type::config) != (seq == 0)) {
                r.findings.push_back({peer_name, "config_misplaced", seq,
                                      static_cast<std::int64_t>(i), "config placement violated"});
            }
        }

        std::vector<bool> validity;
        if (seq == 0) {
            validity = {true};
        } else {
            auto codes = validate::validate_block(vctx, b, replica);
            for (std::size_t i = 0; i < codes.size(); ++i) {
                bool stored = core::bitmask_get(*b.metadata_bitmask, i);
                bool fresh = codes[i] == validate::tx_code::valid;
                if (stored != fresh) {
                    r.findings.push_back(
                        {peer_name, "verdict_mismatch", seq, static_cast<std::int64_t>(i),
                         std::string("stored ") + (stored ? "valid" : "invalid") +
                             ", re-validation says " + validate::tx_code_name(codes[i])});
                }
                if (fresh) ++pv.valid;
            }
            validity = validate::codes_to_validity(codes);
        }
        pv.txs += b.txs.size();
        // Continue from the recomputed truth so one defect cannot cascade.
        replica.commit_block(b, validity);
        digest = crypto::sha256_concat({as_view(digest), as_view(chain.payloads[seq])});
    }

    pv.chain_digest = digest;
    pv.state_digest = replica.state_digest();
    pv.ok = std::none_of(r.findings.begin(), r.findings.end(),
                         [&](const verify_finding& f) { return f.peer == peer_name; });
    r.peers.push_back(std::move(pv));
    return r;
}

verify_report verify_rundir(const std::filesystem::path& dir) {
    if (std::filesystem::exists(dir / "blocks.dat")) return verify_ledger_dir(dir, dir.filename().string());

    verify_report r;
    auto peers_dir = dir / "peers";
    std::vector<std::filesystem::path> dirs;
    if (std::filesystem::is_directory(peers_dir)) {
        for (const auto& e : std::filesystem::directory_iterator(peers_dir)) {
            if (e.is_directory()) dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) {
        r.findings.push_back({"", "no_ledgers", 0, -1, "no blocks.dat under " + dir.string()});
        return r;
    }

    std::vector<scanned_chain> chains;
    for (const auto& d : dirs) {
        auto one = verify_ledger_dir(d, d.filename().string());
        r.peers.insert(r.peers.end(), one.peers.begin(), one.peers.end());
        r.findings.insert(r.findings.end(), one.findings.begin(), one.findings.end());
        std::vector<verify_finding> scratch;
        chains.push_back(load_chain(d, d.filename().string(), scratch));
    }

    // Peers may stop at different heights, but shared prefixes must be
    // byte-identical, verdict bits included.
    for (std::size_t p = 1; p < chains.size(); ++p) {
        auto shared = std::min(chains[0].payloads.size(), chains[p].payloads.size());
        for (std::size_t seq = 0; seq < shared; ++seq) {
            if (chains[p].payloads[seq] != chains[0].payloads[seq]) {
                r.findings.push_back({"", "peer_divergence", seq, -1,
                                      r.peers[p].peer + " differs from " + r.peers[0].peer});
                break;
            }
        }
    }
    return r;
}

std::string verify_report_to_json_text(const verify_report& r) {
    json j;
    j["ok"] = r.ok();
    j["peers"] = json::array();
    for (const auto& p : r.peers) {
        j["peers"].push_back({{"peer", p.peer},
                              {"blocks", p.blocks},
                              {"txs", p.txs},
                              {"valid", p.valid},
                              {"chain_digest", to_hex(p.chain_digest)},
                              {"state_digest", to_hex(p.state_digest)},
                              {"ok", p.ok}});
    }
    j["findings"] = json::array();
    for (const auto& f : r.findings) {
        j["findings"].push_back({{"peer", f.peer},
                                 {"kind", f.kind},
                                 {"seq", f.seq},
                                 {"tx_index", f.tx_index},
                                 {"detail", f.detail}});
    }
    return j.dump(2);
}

}  // namespace evov::harness
