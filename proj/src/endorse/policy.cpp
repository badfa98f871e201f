#include "endorse/policy.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

namespace evov::endorse {

namespace {

using node = endorsement_policy::node;
using kind = endorsement_policy::kind;

struct parser {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n')) ++pos;
    }

    char peek() {
        skip_ws();
        if (pos >= text.size()) throw policy_parse_error("unexpected end of policy");
        return text[pos];
    }

    void expect(char c) {
        if (peek() != c) throw policy_parse_error(std::string("expected '") + c + "' at offset " + std::to_string(pos));
        ++pos;
    }

    bool try_consume(std::string_view word) {
        skip_ws();
        if (text.substr(pos, word.size()) == word) {
            pos += word.size();
            return true;
        }
        return false;
    }

    std::string name() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_' || text[pos] == '-' || text[pos] == '.'))
            ++pos;
        if (pos == start) throw policy_parse_error("expected name at offset " + std::to_string(start));
        return std::string(text.substr(start, pos - start));
    }

    std::uint32_t integer() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start) throw policy_parse_error("expected integer at offset " + std::to_string(start));
        return static_cast<std::uint32_t>(std::stoul(std::string(text.substr(start, pos - start))));
    }

    std::vector<node> child_list() {
        std::vector<node> children;
        children.push_back(expr());
        while (true) {
            skip_ws();
            if (pos < text.size() && text[pos] == ',') {
                ++pos;
                children.push_back(expr());
            } else {
                break;
            }
        }
        expect(')');
        return children;
    }

    node expr() {
        if (try_consume("AND")) {
            expect('(');
            node n;
            n.k = kind::op_and;
            n.children = child_list();
            return n;
        }
        if (try_consume("OR")) {
            expect('(');
            node n;
            n.k = kind::op_or;
            n.children = child_list();
            return n;
        }
        if (try_consume("OUTOF")) {
            expect('(');
            node n;
            n.k = kind::op_outof;
            n.threshold = integer();
            expect(',');
            n.children = child_list();
            if (n.threshold < 1 || n.threshold > n.children.size())
                throw policy_parse_error("OUTOF threshold out of range");
            return n;
        }
        if (try_consume("org")) {
            expect(':');
            node n;
            n.k = kind::leaf_org;
            n.name = name();
            return n;
        }
        if (try_consume("id")) {
            expect(':');
            node n;
            n.k = kind::leaf_id;
            n.name = name();
            return n;
        }
        throw policy_parse_error("unrecognized token at offset " + std::to_string(pos));
    }
};

void node_to_string(const node& n, std::string& out) {
    switch (n.k) {
        case kind::leaf_org:
            out += "org:" + n.name;
            return;
        case kind::leaf_id:
            out += "id:" + n.name;
            return;
        case kind::op_and:
            out += "AND(";
            break;
        case kind::op_or:
            out += "OR(";
            break;
        case kind::op_outof:
            out += "OUTOF(" + std::to_string(n.threshold) + ", ";
            break;
    }
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ", ";
        node_to_string(n.children[i], out);
    }
    out += ")";
}

bool eval_node(const node& n, const std::vector<principal>& endorsers) {
    switch (n.k) {
        case kind::leaf_org:
            return std::any_of(endorsers.begin(), endorsers.end(),
                               [&](const principal& p) { return p.org == n.name; });
        case kind::leaf_id:
            return std::any_of(endorsers.begin(), endorsers.end(),
                               [&](const principal& p) { return p.id == n.name; });
        case kind::op_and: {
            for (const auto& c : n.children)
                if (!eval_node(c, endorsers)) return false;
            return true;
        }
        case kind::op_or: {
            for (const auto& c : n.children)
                if (eval_node(c, endorsers)) return true;
            return false;
        }
        case kind::op_outof: {
            std::uint32_t got = 0;
            for (const auto& c : n.children)
                if (eval_node(c, endorsers)) ++got;
            return got >= n.threshold;
        }
    }
    return false;
}

using token_set = std::set<std::string>;

std::vector<token_set> cross(const std::vector<token_set>& a, const std::vector<token_set>& b,
                             std::size_t cap) {
    std::vector<token_set> out;
    for (const auto& x : a)
        for (const auto& y : b) {
            token_set u = x;
            u.insert(y.begin(), y.end());
            out.push_back(std::move(u));
            if (out.size() > cap * 8) throw error("policy too complex to enumerate");
        }
    return out;
}

void minimalize(std::vector<token_set>& sets) {
    std::sort(sets.begin(), sets.end(),
              [](const token_set& a, const token_set& b) { return a.size() < b.size(); });
    std::vector<token_set> keep;
    for (const auto& s : sets) {
        bool dominated = std::any_of(keep.begin(), keep.end(), [&](const token_set& k) {
            return std::includes(s.begin(), s.end(), k.begin(), k.end());
        });
        if (!dominated) keep.push_back(s);
    }
    sets = std::move(keep);
}

std::vector<token_set> dnf(const node& n, std::size_t cap) {
    switch (n.k) {
        case kind::leaf_org:
            return {token_set{"org:" + n.name}};
        case kind::leaf_id:
            return {token_set{"id:" + n.name}};
        case kind::op_and: {
            std::vector<token_set> acc{token_set{}};
            for (const auto& c : n.children) acc = cross(acc, dnf(c, cap), cap);
            minimalize(acc);
            return acc;
        }
        case kind::op_or: {
            std::vector<token_set> acc;
            for (const auto& c : n.children) {
                auto cs = dnf(c, cap);
                acc.insert(acc.end(), cs.begin(), cs.end());
            }
            minimalize(acc);
            return acc;
        }
        case kind::op_outof: {
            std::size_t n_children = n.children.size();
            std::vector<token_set> acc;
            std::vector<std::size_t> idx(n.threshold);
            // Enumerate k-subsets of children, AND within, OR across.
            std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
                if (depth == n.threshold) {
                    std::vector<token_set> combo{token_set{}};
                    for (std::size_t d = 0; d < n.threshold; ++d)
                        combo = cross(combo, dnf(n.children[idx[d]], cap), cap);
                    acc.insert(acc.end(), combo.begin(), combo.end());
                    return;
                }
                for (std::size_t i = start; i + (n.threshold - depth) <= n_children; ++i) {
                    idx[depth] = i;
                    rec(i + 1, depth + 1);
                }
            };
            rec(0, 0);
            minimalize(acc);
            return acc;
        }
    }
    return {};
}

void collect_mentions(const node& n, std::vector<std::pair<kind, std::string>>& out) {
    if (n.k == kind::leaf_org || n.k == kind::leaf_id) {
        out.emplace_back(n.k, n.name);
        return;
    }
    for (const auto& c : n.children) collect_mentions(c, out);
}

}  // namespace

endorsement_policy parse_policy(std::string_view text) {
    parser p{text};
    endorsement_policy pol;
    pol.root = p.expr();
    p.skip_ws();
    if (p.pos != text.size()) throw policy_parse_error("trailing characters in policy");
    return pol;
}

std::string policy_to_string(const endorsement_policy& p) {
    std::string out;
    node_to_string(p.root, out);
    return out;
}

bool eval_policy(const endorsement_policy& p, const std::vector<principal>& endorsers) {
    return eval_node(p.root, endorsers);
}

std::vector<std::vector<std::string>> minimal_satisfying_sets(const endorsement_policy& p,
                                                              std::size_t cap) {
    auto sets = dnf(p.root, cap);
    if (sets.size() > cap) throw error("policy too complex to enumerate");
    std::vector<std::vector<std::string>> out;
    out.reserve(sets.size());
    for (const auto& s : sets) out.emplace_back(s.begin(), s.end());
    std::sort(out.begin(), out.end());
    return out;
}

bool policy_mentions(const endorsement_policy& p, const principal& who) {
    std::vector<std::pair<endorsement_policy::kind, std::string>> mentions;
    collect_mentions(p.root, mentions);
    for (const auto& [k, name] : mentions) {
        if (k == endorsement_policy::kind::leaf_org && name == who.org) return true;
        if (k == endorsement_policy::kind::leaf_id && name == who.id) return true;
    }
    return false;
}

std::vector<std::string> policy_leaves(const endorsement_policy& p) {
    std::vector<std::pair<endorsement_policy::kind, std::string>> mentions;
    collect_mentions(p.root, mentions);
    std::vector<std::string> out;
    for (const auto& [k, name] : mentions)
        out.push_back((k == endorsement_policy::kind::leaf_org ? "org:" : "id:") + name);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace evov::endorse
