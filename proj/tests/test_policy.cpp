#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "endorse/policy.hpp"
#include "harness/sim.hpp"

using namespace evov;
using namespace evov::endorse;

namespace {

// Test-owned policy model over a 5-principal universe. Principals u0..u4;
// orgs pair them up: g0 = {u0,u1}, g1 = {u2,u3}, g2 = {u4}. The oracle never
// touches library code, so agreement is meaningful.
struct tnode {
    bool leaf = true;
    int universe_index = 0;  // leaves
    bool by_id = true;
    unsigned threshold = 0;  // internal
    std::vector<tnode> kids;
};

std::string org_of(int u) { return "g" + std::to_string(u / 2); }
std::string id_of(int u) { return "u" + std::to_string(u); }

bool oracle_eval(const tnode& n, unsigned subset) {
    if (n.leaf) {
        if (n.by_id) return (subset >> n.universe_index) & 1u;
        for (int u = 0; u < 5; ++u)
            if (((subset >> u) & 1u) && org_of(u) == org_of(n.universe_index)) return true;
        return false;
    }
    unsigned sat = 0;
    for (const auto& k : n.kids) sat += oracle_eval(k, subset) ? 1u : 0u;
    return sat >= n.threshold;
}

// Random tree with a bounded leaf budget; `style` coverage: OUTOF spelled as
// AND/OR where the threshold allows.
tnode random_tree(sim::rng& r, int& budget, int depth) {
    tnode n;
    if (budget <= 1 || depth >= 3 || r.chance(0.45)) {
        n.leaf = true;
        n.universe_index = static_cast<int>(r.below(5));
        n.by_id = r.chance(0.5);
        budget -= 1;
        return n;
    }
    n.leaf = false;
    auto want = 2 + r.below(3);
    while (n.kids.size() < want && budget > 0) n.kids.push_back(random_tree(r, budget, depth + 1));
    if (n.kids.empty()) {
        n.leaf = true;
        n.universe_index = static_cast<int>(r.below(5));
        budget -= 1;
        return n;
    }
    n.threshold = 1 + static_cast<unsigned>(r.below(n.kids.size()));
    return n;
}

std::string render(const tnode& n, sim::rng& r) {
    if (n.leaf) return (n.by_id ? "id:" : "org:") + (n.by_id ? id_of(n.universe_index) : org_of(n.universe_index));
    std::string inner;
    for (const auto& k : n.kids) {
        if (!inner.empty()) inner += ", ";
        inner += render(k, r);
    }
    if (n.threshold == n.kids.size() && r.chance(0.5)) return "AND(" + inner + ")";
    if (n.threshold == 1 && r.chance(0.5)) return "OR(" + inner + ")";
    return "OUTOF(" + std::to_string(n.threshold) + ", " + inner + ")";
}

std::vector<principal> endorsers_of(unsigned subset) {
    std::vector<principal> out;
    for (int u = 0; u < 5; ++u)
        if ((subset >> u) & 1u) out.push_back({id_of(u), org_of(u)});
    return out;
}

// True when `subset` covers the token set: every org token has a member in
// the subset, every id token is present itself.
bool covers(unsigned subset, const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
        bool hit = false;
        for (int u = 0; u < 5; ++u) {
            if (!((subset >> u) & 1u)) continue;
            if (t == "id:" + id_of(u) || t == "org:" + org_of(u)) hit = true;
        }
        if (!hit) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("eval agrees with the truth-table oracle") {
    sim::rng r(2024);
    for (int iter = 0; iter < 400; ++iter) {
        int budget = 5;
        auto tree = random_tree(r, budget, 0);
        auto text = render(tree, r);
        auto p = parse_policy(text);
        for (unsigned subset = 0; subset < 32; ++subset) {
            CAPTURE(text);
            CAPTURE(subset);
            CHECK(eval_policy(p, endorsers_of(subset)) == oracle_eval(tree, subset));
        }
    }
}

TEST_CASE("monotone: adding endorsers never unsatisfies") {
    sim::rng r(77);
    for (int iter = 0; iter < 1000; ++iter) {
        int budget = 5;
        auto tree = random_tree(r, budget, 0);
        auto p = parse_policy(render(tree, r));
        auto small = static_cast<unsigned>(r.below(32));
        auto big = small | static_cast<unsigned>(r.below(32));
        if (eval_policy(p, endorsers_of(small))) CHECK(eval_policy(p, endorsers_of(big)));
    }
}

TEST_CASE("parse and print round-trip") {
    sim::rng r(5);
    for (int iter = 0; iter < 200; ++iter) {
        int budget = 5;
        auto tree = random_tree(r, budget, 0);
        auto text = render(tree, r);
        auto p1 = parse_policy(text);
        auto p2 = parse_policy(policy_to_string(p1));
        // The round-tripped policy is behaviorally identical.
        for (unsigned subset = 0; subset < 32; ++subset)
            CHECK(eval_policy(p1, endorsers_of(subset)) == eval_policy(p2, endorsers_of(subset)));
    }

    // Whitespace tolerance.
    auto p = parse_policy("  AND( org:g0 ,OR(id:u4,  id:u2) ) ");
    CHECK(eval_policy(p, {{"u0", "g0"}, {"u4", "g2"}}));
    CHECK_FALSE(eval_policy(p, {{"u4", "g2"}}));
}

TEST_CASE("parse rejects malformed expressions") {
    CHECK_THROWS_AS(parse_policy(""), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("XOR(org:a, org:b)"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("AND()"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("OUTOF(0, org:a)"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("OUTOF(3, org:a, org:b)"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("OUTOF(x, org:a)"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("org:"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("member:a"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("AND(org:a"), policy_parse_error);
    CHECK_THROWS_AS(parse_policy("AND(org:a) trailing"), policy_parse_error);
}

TEST_CASE("minimal satisfying sets characterize the policy") {
    sim::rng r(11);
    for (int iter = 0; iter < 300; ++iter) {
        int budget = 5;
        auto tree = random_tree(r, budget, 0);
        auto text = render(tree, r);
        auto p = parse_policy(text);
        auto sets = minimal_satisfying_sets(p);
        // Exact coverage equivalence: a subset satisfies the policy iff it
        // covers one of the minimal token sets.
        for (unsigned subset = 0; subset < 32; ++subset) {
            bool covered = false;
            for (const auto& ts : sets) covered = covered || covers(subset, ts);
            CAPTURE(text);
            CHECK(covered == eval_policy(p, endorsers_of(subset)));
        }
    }
}

TEST_CASE("minimal set expansion is capped") {
    // OUTOF(3, 6 org leaves) has C(6,3) = 20 minimal sets.
    auto p = parse_policy("OUTOF(3, org:a, org:b, org:c, org:d, org:e, org:f)");
    CHECK(minimal_satisfying_sets(p, 20).size() == 20);
    CHECK_THROWS(minimal_satisfying_sets(p, 19));
}

TEST_CASE("policy mentions and leaves") {
    auto p = parse_policy("AND(org:g0, OR(id:u4, org:g1))");
    CHECK(policy_mentions(p, {"u0", "g0"}));
    CHECK(policy_mentions(p, {"u4", "gX"}));  // named by id
    CHECK(policy_mentions(p, {"u2", "g1"}));
    CHECK_FALSE(policy_mentions(p, {"u9", "g9"}));

    // Sorted, deduplicated leaf tokens.
    auto leaves = policy_leaves(p);
    CHECK(leaves == std::vector<std::string>{"id:u4", "org:g0", "org:g1"});
    auto dup = parse_policy("OR(org:g0, org:g0, id:u4)");
    CHECK(policy_leaves(dup) == std::vector<std::string>{"id:u4", "org:g0"});
}

TEST_CASE("and or are outof aliases") {
    auto a = parse_policy("AND(org:a, org:b)");
    auto o = parse_policy("OUTOF(2, org:a, org:b)");
    std::vector<principal> both{{"x", "a"}, {"y", "b"}};
    std::vector<principal> one{{"x", "a"}};
    CHECK(eval_policy(a, both) == eval_policy(o, both));
    CHECK(eval_policy(a, one) == eval_policy(o, one));
    CHECK_FALSE(eval_policy(a, one));
    CHECK(eval_policy(parse_policy("OR(org:a, org:b)"), one));
    CHECK_FALSE(eval_policy(parse_policy("OR(org:a, org:b)"), {}));
}
