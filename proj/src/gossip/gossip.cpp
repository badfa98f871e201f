#include "gossip/gossip.hpp"

#include <algorithm>

namespace evov::gossip {

bool membership_view::integrate(const alive_msg& m, std::uint64_t now_us) {
    auto& e = entries_[m.peer_id];
    if (m.heartbeat <= e.heartbeat && e.last_heard_us != 0) return false;
    e.heartbeat = std::max(e.heartbeat, m.heartbeat);
    e.last_heard_us = now_us;
    return true;
}

void membership_view::observe_self(std::uint64_t now_us) {
    auto& e = entries_[self_];
    ++e.heartbeat;
    e.last_heard_us = now_us;
}

bool membership_view::is_alive(const std::string& id, std::uint64_t now_us,
                               std::uint64_t timeout_us) const {
    if (id == self_) return true;
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.last_heard_us == 0) return false;
    return now_us - it->second.last_heard_us <= timeout_us;
}

std::vector<std::string> membership_view::alive_peers(std::uint64_t now_us,
                                                      std::uint64_t timeout_us) const {
    std::vector<std::string> out;
    for (const auto& [id, e] : entries_) {
        if (id == self_) continue;
        if (e.last_heard_us != 0 && now_us - e.last_heard_us <= timeout_us) out.push_back(id);
    }
    return out;  // map order keeps this sorted
}

std::uint64_t membership_view::heartbeat(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? 0 : it->second.heartbeat;
}

std::vector<core::block> block_buffer::insert(core::block b) {
    std::vector<core::block> out;
    auto seq = b.header.seq;
    if (seq < next_expected_) return out;
    if (seq != next_expected_) {
        if (held_.size() < capacity_ && !held_.contains(seq)) held_.emplace(seq, std::move(b));
        return out;
    }
    out.push_back(std::move(b));
    ++next_expected_;
    for (auto it = held_.begin(); it != held_.end() && it->first == next_expected_;) {
        out.push_back(std::move(it->second));
        it = held_.erase(it);
        ++next_expected_;
    }
    // Anything left below the watermark is stale (duplicate arrivals).
    held_.erase(held_.begin(), held_.lower_bound(next_expected_));
    return out;
}

std::vector<std::uint64_t> block_buffer::missing() const {
    std::vector<std::uint64_t> out;
    if (held_.empty()) return out;
    auto highest = held_.rbegin()->first;
    for (auto seq = next_expected_; seq < highest; ++seq) {
        if (!held_.contains(seq)) out.push_back(seq);
    }
    return out;
}

std::optional<std::string> elect_leader(const std::vector<std::string>& alive_org_peers) {
    if (alive_org_peers.empty()) return std::nullopt;
    return *std::min_element(alive_org_peers.begin(), alive_org_peers.end());
}

}  // namespace evov::gossip
