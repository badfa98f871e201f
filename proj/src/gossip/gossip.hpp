#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace evov::gossip {

struct gossip_config {
    std::uint32_t fanout = 3;
    std::uint64_t push_period_us = 100'000;      // anti-entropy push interval
    std::uint64_t alive_period_us = 250'000;     // heartbeat interval
    std::uint64_t suspect_timeout_us = 1'500'000;  // silence before a peer is presumed down
    std::uint32_t buffer_capacity = 256;         // out-of-order blocks held per peer
};

struct alive_msg {
    std::string peer_id;
    std::uint64_t heartbeat = 0;  // monotone per sender; stale heartbeats are ignored
};

// Failure-detector view: who was heard from recently. Purely deterministic in
// (messages, clock) so every replica with the same inputs agrees.
class membership_view {
public:
    explicit membership_view(std::string self_id) : self_(std::move(self_id)) {}

    // Returns true if the message advanced the view (fresh heartbeat).
    bool integrate(const alive_msg& m, std::uint64_t now_us);
    void observe_self(std::uint64_t now_us);

    bool is_alive(const std::string& id, std::uint64_t now_us, std::uint64_t timeout_us) const;
    std::vector<std::string> alive_peers(std::uint64_t now_us, std::uint64_t timeout_us) const;

    std::uint64_t heartbeat(const std::string& id) const;
    const std::string& self() const { return self_; }

private:
    struct entry {
        std::uint64_t heartbeat = 0;
        std::uint64_t last_heard_us = 0;
    };
    std::string self_;
    std::map<std::string, entry> entries_;
};

// Reorder buffer for disseminated blocks: absorbs out-of-order arrivals and
// releases the contiguous prefix starting at the delivery watermark.
class block_buffer {
public:
    explicit block_buffer(std::uint64_t next_expected = 1, std::uint32_t capacity = 256)
        : next_expected_(next_expected), capacity_(capacity) {}

    // Returns the blocks that became deliverable (possibly empty). Duplicates
    // and already-delivered sequence numbers are dropped.
    std::vector<core::block> insert(core::block b);

    std::uint64_t next_expected() const { return next_expected_; }
    bool holds(std::uint64_t seq) const { return held_.contains(seq); }
    std::size_t held_count() const { return held_.size(); }

    // Sequence numbers missing below the highest held block; used to drive
    // pull-based repair.
    std::vector<std::uint64_t> missing() const;

private:
    std::uint64_t next_expected_;
    std::uint32_t capacity_;
    std::map<std::uint64_t, core::block> held_;
};

// Deterministic org-leader election over the locally-alive view: the smallest
// peer id wins. Every member with the same view picks the same leader.
std::optional<std::string> elect_leader(const std::vector<std::string>& alive_org_peers);

// Fanout selection without replacement, deterministic in the rng draw
// sequence. `rand_below(n)` must return a value in [0, n).
template <typename Rng>
std::vector<std::string> pick_fanout(std::vector<std::string> candidates, std::uint32_t fanout,
                                     Rng&& rand_below) {
    std::vector<std::string> out;
    while (!candidates.empty() && out.size() < fanout) {
        auto i = rand_below(candidates.size());
        out.push_back(std::move(candidates[i]));
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return out;
}

}  // namespace evov::gossip
