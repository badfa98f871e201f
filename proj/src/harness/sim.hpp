#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <string_view>
#include <vector>

#include "common/bytes.hpp"

namespace evov::sim {

// Single-threaded discrete-event queue. Ties in time break by insertion
// order, so identical schedules replay identically.
class sim_queue {
public:
    using handler = std::function<void()>;

    std::uint64_t now() const { return now_; }
    void at(std::uint64_t t, handler h);
    void after(std::uint64_t dt, handler h) { at(now_ + dt, std::move(h)); }

    bool step();                        // run the next event; false when drained
    void run(std::uint64_t max_events = 0);
    std::size_t pending() const { return heap_.size(); }

private:
    struct event {
        std::uint64_t t;
        std::uint64_t seq;
        handler h;
    };
    struct later {
        bool operator()(const event& a, const event& b) const {
            return a.t != b.t ? a.t > b.t : a.seq > b.seq;
        }
    };
    std::priority_queue<event, std::vector<event>, later> heap_;
    std::uint64_t now_ = 0;
    std::uint64_t next_seq_ = 0;
};

// splitmix64: tiny, portable, fully deterministic across platforms.
class rng {
public:
    explicit rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    std::uint64_t below(std::uint64_t n);                  // uniform in [0, n)
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi);  // uniform in [lo, hi]
    double uniform();                                       // [0, 1)
    bool chance(double p);
    bytes random_bytes(std::size_t n);

private:
    std::uint64_t state_;
};

// Stable sub-seed derivation so independent streams never overlap.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

}  // namespace evov::sim
