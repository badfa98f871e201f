#include "harness/sim.hpp"

#include <limits>

#include "common/crypto.hpp"
#include "core/codec.hpp"

namespace evov::sim {

void sim_queue::at(std::uint64_t t, handler h) {
    if (t < now_) t = now_;  // no scheduling into the past
    heap_.push(event{t, next_seq_++, std::move(h)});
}

bool sim_queue::step() {
    if (heap_.empty()) return false;
    // priority_queue::top is const; moving the handler out needs a copy-free
    // pop, so swap through a local.
    auto ev = heap_.top();
    heap_.pop();
    now_ = ev.t;
    ev.h();
    return true;
}

void sim_queue::run(std::uint64_t max_events) {
    std::uint64_t n = 0;
    while (step()) {
        if (max_events != 0 && ++n >= max_events) return;
    }
}

std::uint64_t rng::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rng::below(std::uint64_t n) {
    if (n == 0) return 0;
    // Rejection sampling keeps the distribution exactly uniform.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % n;
}

std::uint64_t rng::between(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
}

double rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

bool rng::chance(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
}

bytes rng::random_bytes(std::size_t n) {
    bytes out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(next() & 0xff);
    return out;
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
    core::wire_writer w;
    w.u64(root);
    w.raw(byte_view(reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()));
    auto h = crypto::sha256(as_view(w.data()));
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= static_cast<std::uint64_t>(h[i]) << (8 * i);
    return out;
}

}  // namespace evov::sim
