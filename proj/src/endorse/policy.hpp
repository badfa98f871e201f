#pragma once

#include "common/bytes.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evov::endorse {

struct policy_parse_error : error {
    using error::error;
};

struct principal {
    std::string id;
    std::string org;
    bool operator==(const principal&) const = default;
    auto operator<=>(const principal&) const = default;
};

// Monotone threshold tree. Leaves name a principal by org or by identity id;
// OUTOF thresholds satisfy 1 <= k <= #children. AND/OR are OUTOF(n)/OUTOF(1).
struct endorsement_policy {
    enum class kind : std::uint8_t { leaf_org, leaf_id, op_and, op_or, op_outof };
    struct node {
        kind k = kind::leaf_org;
        std::string name;                 // leaves only
        std::uint32_t threshold = 0;      // op_outof only
        std::vector<node> children;
    };
    node root;
};

// Grammar: AND(e, ...) | OR(e, ...) | OUTOF(k, e, ...) | org:NAME | id:NAME
endorsement_policy parse_policy(std::string_view text);
std::string policy_to_string(const endorsement_policy& p);

bool eval_policy(const endorsement_policy& p, const std::vector<principal>& endorsers);

// Minimal satisfying sets, each a set of leaf tokens ("org:X" / "id:Y").
// Throws if expansion exceeds `cap` sets.
std::vector<std::vector<std::string>> minimal_satisfying_sets(const endorsement_policy& p,
                                                              std::size_t cap = 256);

// Whether the policy names this principal anywhere (the endorser test).
bool policy_mentions(const endorsement_policy& p, const principal& who);

std::vector<std::string> policy_leaves(const endorsement_policy& p);

}  // namespace evov::endorse
