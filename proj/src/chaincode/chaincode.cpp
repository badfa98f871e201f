#include "chaincode/chaincode.hpp"

#include "common/crypto.hpp"

namespace evov::chaincode {

namespace {
constexpr char ns_sep = '\0';

void check_key(const std::string& key) {
    if (key.empty()) throw error("empty state key");
    if (key.find(ns_sep) != std::string::npos) throw error("state key contains NUL");
}
}  // namespace

std::string namespaced_key(const std::string& chaincode_id, const std::string& key) {
    check_key(key);
    std::string out = chaincode_id;
    out.push_back(ns_sep);
    out += key;
    return out;
}

std::string strip_namespace(const std::string& chaincode_id, const std::string& full_key) {
    std::size_t prefix = chaincode_id.size() + 1;
    if (full_key.size() <= prefix || full_key.compare(0, chaincode_id.size(), chaincode_id) != 0 ||
        full_key[chaincode_id.size()] != ns_sep)
        throw error("key not in namespace " + chaincode_id);
    return full_key.substr(prefix);
}

std::string encode_range_query(const std::string& full_start, const std::string& full_end) {
    core::wire_writer w;
    w.str(full_start);
    w.str(full_end);
    bytes b = w.take();
    return std::string(b.begin(), b.end());
}

std::pair<std::string, std::string> decode_range_query(const std::string& query) {
    core::wire_reader r(byte_view(reinterpret_cast<const std::uint8_t*>(query.data()), query.size()));
    std::string start = r.str();
    std::string end = r.str();
    r.expect_end();
    return {start, end};
}

hash256 hash_range_result(const std::vector<std::pair<std::string, ledger::versioned_entry>>& entries) {
    core::wire_writer w;
    w.u32(static_cast<std::uint32_t>(entries.size()));
    for (const auto& [key, entry] : entries) {
        w.str(key);
        w.u64(entry.ver.block_num);
        w.u64(entry.ver.tx_num);
    }
    return crypto::sha256(as_view(w.data()));
}

void chaincode_registry::install(const std::string& channel, chaincode_definition def) {
    auto& chs = by_channel_[channel];
    if (chs.contains(def.id)) throw already_installed(def.id);
    chs.emplace(def.id, std::move(def));
}

const chaincode_definition* chaincode_registry::find(const std::string& channel,
                                                     const std::string& id) const {
    auto ch = by_channel_.find(channel);
    if (ch == by_channel_.end()) return nullptr;
    auto it = ch->second.find(id);
    return it == ch->second.end() ? nullptr : &it->second;
}

const chaincode_definition& chaincode_registry::require(const std::string& channel,
                                                        const std::string& id) const {
    const chaincode_definition* def = find(channel, id);
    if (!def) throw unknown_chaincode(id);
    return *def;
}

std::vector<const chaincode_definition*> chaincode_registry::channel_chaincodes(
    const std::string& channel) const {
    std::vector<const chaincode_definition*> out;
    auto ch = by_channel_.find(channel);
    if (ch == by_channel_.end()) return out;
    for (const auto& [id, def] : ch->second) out.push_back(&def);
    return out;
}

struct sim_state {
    const ledger::state_snapshot* snap = nullptr;
    const chaincode_registry* registry = nullptr;
    std::string channel;
    hash256 tx_id{};
    std::map<std::string, std::optional<core::version>> reads;
    std::vector<core::range_read> ranges;
    std::map<std::string, std::optional<bytes>> writes;  // nullopt marks a delete
    std::vector<std::string> write_order;
    std::int64_t budget = 0;
    std::function<std::uint64_t()> entropy;

    sim_context make_context(const std::string& chaincode_id, bool read_only,
                             std::string operation, std::vector<bytes> args) {
        std::string ns = chaincode_id;
        ns.push_back(ns_sep);
        return sim_context(this, std::move(ns), read_only, std::move(operation), std::move(args));
    }
};

sim_context::sim_context(sim_state* st, std::string ns_prefix, bool read_only, std::string operation,
                         std::vector<bytes> args)
    : st_(st), ns_(std::move(ns_prefix)), read_only_(read_only), operation_(std::move(operation)),
      args_(std::move(args)) {}

void sim_context::charge() {
    if (--st_->budget < 0) throw simulation_aborted();
}

std::string sim_context::full_key(const std::string& key) const {
    check_key(key);
    return ns_ + key;
}

const hash256& sim_context::tx_id() const { return st_->tx_id; }

std::uint64_t sim_context::entropy() {
    charge();
    return st_->entropy ? st_->entropy() : 0;
}

std::optional<bytes> sim_context::get_state(const std::string& key) {
    charge();
    std::string full = full_key(key);
    if (auto w = st_->writes.find(full); w != st_->writes.end()) return w->second;
    const ledger::versioned_entry* e = st_->snap->get(full);
    if (!st_->reads.contains(full))
        st_->reads.emplace(full, e ? std::optional<core::version>(e->ver) : std::nullopt);
    if (!e) return std::nullopt;
    return e->value;
}

void sim_context::put_state(const std::string& key, bytes value) {
    charge();
    if (read_only_) throw error("put_state in read-only invocation");
    std::string full = full_key(key);
    if (!st_->writes.contains(full)) st_->write_order.push_back(full);
    st_->writes[full] = std::move(value);
}

void sim_context::del_state(const std::string& key) {
    charge();
    if (read_only_) throw error("del_state in read-only invocation");
    std::string full = full_key(key);
    if (!st_->writes.contains(full)) st_->write_order.push_back(full);
    st_->writes[full] = std::nullopt;
}

std::vector<std::pair<std::string, bytes>> sim_context::get_state_range(const std::string& start,
                                                                        const std::string& end) {
    charge();
    if (start >= end) throw invalid_range("range start must precede end");
    std::string fs = full_key(start), fe = full_key(end);

    auto snap_entries = st_->snap->range(fs, fe);
    st_->ranges.push_back(core::range_read{encode_range_query(fs, fe), hash_range_result(snap_entries)});

    std::map<std::string, bytes> merged;
    for (auto& [key, entry] : snap_entries) merged.emplace(key, entry.value);
    for (auto it = st_->writes.lower_bound(fs); it != st_->writes.end() && it->first < fe; ++it) {
        if (it->second)
            merged[it->first] = *it->second;
        else
            merged.erase(it->first);
    }

    std::vector<std::pair<std::string, bytes>> out;
    out.reserve(merged.size());
    for (auto& [full, value] : merged)
        out.emplace_back(full.substr(ns_.size()), std::move(value));
    return out;
}

bytes sim_context::call_readonly(const std::string& chaincode_id, const std::string& operation,
                                 const std::vector<bytes>& args) {
    charge();
    if (!st_->registry) throw error("no registry for cross-chaincode call");
    const chaincode_definition& def = st_->registry->require(st_->channel, chaincode_id);
    sim_context nested = st_->make_context(chaincode_id, true, operation, args);
    def.handler(nested);
    return nested.response_;
}

sim_result invoke_simulation(const chaincode_registry& reg, const std::string& channel,
                             const std::string& chaincode_id, const hash256& tx_id,
                             const std::string& operation, const std::vector<bytes>& args,
                             const ledger::state_snapshot& snap, const sim_options& opts) {
    const chaincode_definition& def = reg.require(channel, chaincode_id);

    sim_state st;
    st.snap = &snap;
    st.registry = &reg;
    st.channel = channel;
    st.tx_id = tx_id;
    st.budget = opts.op_budget;
    st.entropy = opts.entropy;

    sim_context ctx = st.make_context(chaincode_id, false, operation, args);
    try {
        def.handler(ctx);
    } catch (const simulation_aborted&) {
        throw;
    } catch (const simulation_failed&) {
        throw;
    } catch (const std::exception& e) {
        throw simulation_failed(std::string("chaincode failure: ") + e.what());
    }

    sim_result res;
    res.response = ctx.response();
    for (const auto& [key, ver] : st.reads) res.rwset.reads.push_back(core::read_entry{key, ver});
    res.rwset.range_reads = std::move(st.ranges);
    for (const auto& full : st.write_order) {
        const auto& action = st.writes.at(full);
        if (action)
            res.rwset.writes.push_back(core::write_entry{full, core::write_kind::put, *action});
        else
            res.rwset.writes.push_back(core::write_entry{full, core::write_kind::del, {}});
    }
    return res;
}

}  // namespace evov::chaincode
