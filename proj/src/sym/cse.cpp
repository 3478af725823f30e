// Greedy common subexpression elimination.
//
// Expressions are first lowered into a value-numbered DAG whose sum nodes
// hold signed terms and whose product nodes hold (factor, exponent) items, a
// positive rational coefficient being an ordinary factor. The most frequent
// pair of items shared by several nodes is repeatedly pulled out into a new
// node. Nodes that end up referenced more than once become subexpressions; a
// final hash-consing pass over the rebuilt trees catches identical subtrees.

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "lbmc/sym/ops.hpp"

namespace lbmc::sym {

namespace {

enum class NType { Atom, Sum, Prod, Unary };

struct Item {
    int child;
    int tag;  // sign for sums, exponent for products
    bool operator==(const Item&) const = default;
};

struct DNode {
    NType type;
    Expr atom;        // Atom payload
    Kind unary{};     // Sqrt or Log
    std::vector<Item> items;
};

struct PairKey {
    bool prod;
    int a, ea, b, eb;
    auto operator<=>(const PairKey&) const = default;
};

class Dag {
public:
    std::vector<DNode> nodes;

    int from_expr(const Expr& e) {
        if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
        int id = build(e);
        memo_.emplace(e.node(), id);
        alive_.push_back(e);
        return id;
    }

    int intern(DNode n) {
        auto key = content_key(n);
        if (auto it = table_.find(key); it != table_.end()) return it->second;
        int id = static_cast<int>(nodes.size());
        nodes.push_back(std::move(n));
        table_.emplace(std::move(key), id);
        return id;
    }

    // Follows trivial wrappers (single positive sum term, single product
    // factor with exponent one).
    int resolve(int id) const {
        for (;;) {
            const DNode& n = nodes[id];
            if (n.items.size() == 1 && ((n.type == NType::Sum && n.items[0].tag == 1) ||
                                        (n.type == NType::Prod && n.items[0].tag == 1)))
                id = n.items[0].child;
            else
                return id;
        }
    }

private:
    std::unordered_map<const Node*, int> memo_;
    std::vector<Expr> alive_;  // keeps memo keys from being recycled
    std::map<std::vector<long>, int> table_;
    ExprMap<int> atoms_;

    std::vector<long> content_key(const DNode& n) {
        std::vector<long> k{static_cast<long>(n.type)};
        if (n.type == NType::Atom) {
            auto it = atoms_.find(n.atom);
            long a;
            if (it == atoms_.end()) {
                a = static_cast<long>(atoms_.size());
                atoms_.emplace(n.atom, static_cast<int>(a));
            } else {
                a = it->second;
            }
            k.push_back(a);
            return k;
        }
        k.push_back(static_cast<long>(n.unary));
        std::vector<Item> items = n.items;
        std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
            return x.child != y.child ? x.child < y.child : x.tag < y.tag;
        });
        for (const auto& it : items) {
            k.push_back(it.child);
            k.push_back(it.tag);
        }
        return k;
    }

    int atom(const Expr& e) {
        DNode n{NType::Atom, e, {}, {}};
        return intern(std::move(n));
    }

    int positive_term(const Rational& c, const Expr& rest) {
        if (rest.is_one()) return atom(Expr(c));
        if (c.is_one()) return from_expr(rest);
        return from_expr(product({Expr(c), rest}));
    }

    int build(const Expr& e) {
        switch (e.kind()) {
            case Kind::Rational:
                if (e.value().is_negative()) {
                    DNode n{NType::Sum, {}, {}, {{atom(Expr(-e.value())), -1}}};
                    return intern(std::move(n));
                }
                return atom(e);
            case Kind::Symbol:
            case Kind::Indexed: return atom(e);
            case Kind::Sum: {
                DNode n{NType::Sum, {}, {}, {}};
                for (const auto& t : e.args()) {
                    auto [c, rest] = split_coefficient(t);
                    int sign = c.is_negative() ? -1 : 1;
                    n.items.push_back({positive_term(c.abs(), rest), sign});
                }
                return intern(std::move(n));
            }
            case Kind::Product: {
                auto [c, rest] = split_coefficient(e);
                if (c.is_negative()) {
                    DNode n{NType::Sum, {}, {}, {{positive_term(-c, rest), -1}}};
                    return intern(std::move(n));
                }
                DNode n{NType::Prod, {}, {}, {}};
                if (!c.is_one()) n.items.push_back({atom(Expr(c)), 1});
                for (const auto& f : e.args()) {
                    if (f.is_rational()) continue;
                    if (f.is_power())
                        n.items.push_back({from_expr(f.base()), f.exponent()});
                    else
                        n.items.push_back({from_expr(f), 1});
                }
                return intern(std::move(n));
            }
            case Kind::Power: {
                DNode n{NType::Prod, {}, {}, {{from_expr(e.base()), e.exponent()}}};
                return intern(std::move(n));
            }
            case Kind::Sqrt:
            case Kind::Log: {
                DNode n{NType::Unary, {}, e.kind(), {{from_expr(e.base()), 0}}};
                return intern(std::move(n));
            }
        }
        return -1;
    }
};

class PairIndex {
public:
    explicit PairIndex(Dag& dag) : dag_(dag) {}

    void register_node(int id) { node_pairs(id, +1); }
    void unregister_node(int id) { node_pairs(id, -1); }

    bool best(PairKey& key) const {
        if (pq_.empty()) return false;
        auto it = pq_.begin();
        if (-it->first < 2) return false;
        key = it->second;
        return true;
    }

    std::vector<int> holders(const PairKey& k) const {
        std::vector<int> out;
        auto it = index_.find(k);
        if (it == index_.end()) return out;
        for (const auto& [n, m] : it->second)
            if (m > 0) out.push_back(n);
        return out;
    }

    void apply_delta(const PairKey& k, int node, int delta) {
        auto& holders = index_[k];
        int before = static_cast<int>(holders.size());
        int& m = holders[node];
        m += delta;
        if (m == 0) holders.erase(node);
        int after = static_cast<int>(holders.size());
        if (before != after) {
            if (before > 0) pq_.erase({-before, k});
            if (after > 0) pq_.insert({-after, k});
            if (after == 0) index_.erase(k);
        }
    }

    static bool make_key(const DNode& n, const Item& x, const Item& y, PairKey& k) {
        if (x.child == y.child) return false;
        if (n.type == NType::Sum) {
            k = PairKey{false, std::min(x.child, y.child), 0, std::max(x.child, y.child), x.tag * y.tag};
            return true;
        }
        if (n.type == NType::Prod) {
            std::pair<int, int> p{x.child, x.tag}, q{y.child, y.tag};
            if (q < p) std::swap(p, q);
            k = PairKey{true, p.first, p.second, q.first, q.second};
            return true;
        }
        return false;
    }

private:
    Dag& dag_;
    std::map<PairKey, std::map<int, int>> index_;
    std::set<std::pair<int, PairKey>> pq_;

    void node_pairs(int id, int delta) {
        const DNode& n = dag_.nodes[id];
        if (n.type != NType::Sum && n.type != NType::Prod) return;
        const auto& it = n.items;
        for (std::size_t i = 0; i < it.size(); ++i)
            for (std::size_t j = i + 1; j < it.size(); ++j) {
                PairKey k;
                if (make_key(n, it[i], it[j], k)) apply_delta(k, id, delta);
            }
    }
};

// Replaces one occurrence of the pair described by `key` in node `p` with a
// reference to node `target`. Updates the pair index incrementally.
bool replace_pair(Dag& dag, PairIndex& idx, int p, const PairKey& key, int target) {
    DNode& n = dag.nodes[p];
    auto& it = n.items;
    for (std::size_t i = 0; i < it.size(); ++i)
        for (std::size_t j = i + 1; j < it.size(); ++j) {
            PairKey k;
            if (!PairIndex::make_key(n, it[i], it[j], k) || !(k == key)) continue;
            // Drop every pair that touches positions i or j.
            for (std::size_t x = 0; x < it.size(); ++x) {
                PairKey kk;
                if (x != i && PairIndex::make_key(n, it[i], it[x], kk)) idx.apply_delta(kk, p, -1);
                if (x != i && x != j && PairIndex::make_key(n, it[j], it[x], kk)) idx.apply_delta(kk, p, -1);
            }

            Item ni{target, 1};
            if (n.type == NType::Sum) {
                int a_sign = it[i].child == key.a ? it[i].tag : it[j].tag;
                ni.tag = a_sign;
            }
            it.erase(it.begin() + static_cast<long>(j));
            it.erase(it.begin() + static_cast<long>(i));
            for (const auto& other : it) {
                PairKey kk;
                if (PairIndex::make_key(n, ni, other, kk)) idx.apply_delta(kk, p, +1);
            }
            it.push_back(ni);
            return true;
        }
    return false;
}

struct Rebuilder {
    Dag& dag;
    std::unordered_map<int, Expr> bound;  // nodes turned into subexpression symbols
    std::unordered_map<int, Expr> memo;

    Expr value(int id) {
        id = dag.resolve(id);
        if (auto it = bound.find(id); it != bound.end()) return it->second;
        return structure(id);
    }

    Expr structure(int id) {
        if (auto it = memo.find(id); it != memo.end()) return it->second;
        const DNode& n = dag.nodes[id];
        Expr r;
        switch (n.type) {
            case NType::Atom: r = n.atom; break;
            case NType::Sum: {
                std::vector<Expr> ts;
                for (const auto& it : n.items) {
                    Expr v = value(it.child);
                    ts.push_back(it.tag < 0 ? -v : v);
                }
                r = sum(std::move(ts));
                break;
            }
            case NType::Prod: {
                std::vector<Expr> fs;
                for (const auto& it : n.items) fs.push_back(pow(value(it.child), it.tag));
                r = product(std::move(fs));
                break;
            }
            case NType::Unary: {
                Expr a = value(n.items[0].child);
                r = n.unary == Kind::Sqrt ? sqrt(a) : log(a);
                break;
            }
        }
        memo.emplace(id, r);
        return r;
    }
};

class Namer {
public:
    Namer(std::string prefix, const std::vector<Assignment>& subs, const std::vector<Assignment>& mains)
        : prefix_(std::move(prefix)) {
        auto note = [&](const Expr& e) {
            for (const auto& s : free_symbols(e))
                if (s.is_symbol()) taken_.insert(s.name());
        };
        for (const auto& a : subs) {
            note(a.target);
            note(a.value);
        }
        for (const auto& a : mains) {
            note(a.target);
            note(a.value);
        }
    }
    Expr fresh() {
        for (;;) {
            std::string name = prefix_ + std::to_string(next_++);
            if (taken_.insert(name).second) return sym(name);
        }
    }

private:
    std::string prefix_;
    std::unordered_set<std::string> taken_;
    int next_ = 0;
};

bool is_free_node(const DNode& n) {
    if (n.type == NType::Atom) return true;
    // A bare negation costs nothing.
    return n.type == NType::Sum && n.items.size() == 1;
}

// One round of pair extraction on the DAG built from all values.
CseResult pair_round(const std::vector<Assignment>& subs, const std::vector<Assignment>& mains, Namer& namer) {
    Dag dag;
    std::vector<int> sub_roots, main_roots;
    for (const auto& s : subs) sub_roots.push_back(dag.from_expr(s.value));
    for (const auto& m : mains) main_roots.push_back(dag.from_expr(m.value));

    PairIndex idx(dag);
    std::size_t initial = dag.nodes.size();
    for (std::size_t i = 0; i < initial; ++i) idx.register_node(static_cast<int>(i));

    PairKey key;
    while (idx.best(key)) {
        DNode nn;
        if (key.prod) {
            nn = DNode{NType::Prod, {}, {}, {{key.a, key.ea}, {key.b, key.eb}}};
        } else {
            nn = DNode{NType::Sum, {}, {}, {{key.a, 1}, {key.b, key.eb}}};
        }
        std::size_t before = dag.nodes.size();
        int target = dag.intern(std::move(nn));
        bool fresh = dag.nodes.size() != before;
        for (int p : idx.holders(key)) {
            if (p == target) continue;
            replace_pair(dag, idx, p, key, target);
        }
        if (fresh) idx.register_node(target);
        PairKey again;
        if (idx.best(again) && again == key) {
            for (int p : idx.holders(key))
                if (p != target) idx.unregister_node(p);
        }
    }

    // Reference counts over everything reachable from the roots.
    std::vector<int> uses(dag.nodes.size(), 0);
    std::vector<char> seen(dag.nodes.size(), 0);
    std::vector<int> stack;
    auto touch = [&](int id) {
        id = dag.resolve(id);
        ++uses[id];
        if (!seen[id]) {
            seen[id] = 1;
            stack.push_back(id);
        }
    };
    for (int r : sub_roots) touch(r);
    for (int r : main_roots) touch(r);
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        for (const auto& it : dag.nodes[id].items) touch(it.child);
    }

    Rebuilder rb{dag, {}, {}};
    // Values of existing subexpressions are referred to by their symbols.
    std::unordered_set<int> sub_bound;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        int r = dag.resolve(sub_roots[i]);
        if (!is_free_node(dag.nodes[r]) && !rb.bound.count(r)) {
            rb.bound.emplace(r, subs[i].target);
            sub_bound.insert(r);
        }
    }

    std::vector<int> order;
    for (std::size_t i = 0; i < dag.nodes.size(); ++i)
        if (seen[i] && uses[i] >= 2 && !sub_bound.count(static_cast<int>(i)) && !is_free_node(dag.nodes[i])) order.push_back(static_cast<int>(i));
    // Children before parents: node ids grow with construction except for
    // extracted pair nodes, so order by depth instead.
    std::vector<int> depth(dag.nodes.size(), -1);
    std::function<int(int)> dep = [&](int id) -> int {
        if (depth[id] >= 0) return depth[id];
        int d = 0;
        for (const auto& it : dag.nodes[id].items) d = std::max(d, dep(dag.resolve(it.child)) + 1);
        return depth[id] = d;
    };
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return dep(x) < dep(y); });

    CseResult out;
    std::vector<Assignment> introduced;
    for (int id : order) {
        Expr v = rb.structure(id);
        if (v.is_rational() || v.is_leaf()) continue;
        Expr s = namer.fresh();
        introduced.push_back({s, v});
        rb.bound.emplace(id, s);
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
        int r = dag.resolve(sub_roots[i]);
        Expr v = rb.structure(r);
        out.subexpressions.push_back({subs[i].target, v});
    }
    for (auto& a : introduced) out.subexpressions.push_back(a);
    for (std::size_t i = 0; i < mains.size(); ++i) out.mains.push_back({mains[i].target, rb.value(main_roots[i])});
    return out;
}

// Hash-conses identical non-trivial subtrees that occur at least twice.
CseResult tree_round(const CseResult& in, Namer& namer) {
    ExprMap<int> count;
    std::function<void(const Expr&)> visit = [&](const Expr& e) {
        if (e.is_rational() || e.is_leaf()) return;
        if (++count[e] > 1) return;
        for (const auto& a : e.args()) visit(a);
    };
    for (const auto& a : in.subexpressions) visit(a.value);
    for (const auto& a : in.mains) visit(a.value);

    ExprMap<Expr> named;
    std::vector<Assignment> introduced;
    std::function<Expr(const Expr&, bool)> rewrite = [&](const Expr& e, bool top) -> Expr {
        if (e.is_rational() || e.is_leaf()) return e;
        if (auto it = named.find(e); it != named.end() && !top) return it->second;
        Expr r = e;
        std::vector<Expr> xs;
        bool changed = false;
        for (const auto& a : e.args()) {
            xs.push_back(rewrite(a, false));
            changed = changed || xs.back().node() != a.node();
        }
        if (changed) {
            switch (e.kind()) {
                case Kind::Sum: r = sum(xs); break;
                case Kind::Product: r = product(xs); break;
                case Kind::Power: r = pow(xs[0], e.exponent()); break;
                case Kind::Sqrt: r = sqrt(xs[0]); break;
                case Kind::Log: r = log(xs[0]); break;
                default: break;
            }
        }
        if (!top && count[e] >= 2) {
            auto [c, rest] = split_coefficient(e);
            bool negation = c.is_minus_one() && (rest.is_leaf());
            if (!negation) {
                Expr s = namer.fresh();
                introduced.push_back({s, r});
                named.emplace(e, s);
                return s;
            }
        }
        return r;
    };
    CseResult out;
    for (const auto& a : in.subexpressions) out.subexpressions.push_back({a.target, rewrite(a.value, true)});
    for (const auto& a : in.mains) out.mains.push_back({a.target, rewrite(a.value, true)});
    for (auto& a : introduced) out.subexpressions.push_back(a);
    return out;
}

// Inlines introduced subexpressions that are referenced fewer than twice.
void inline_single_use(CseResult& r, const std::unordered_set<std::string>& keep) {
    for (bool again = true; again;) {
        again = false;
        ExprMap<int> uses;
        auto note = [&](const Expr& e) {
            std::function<void(const Expr&)> walk = [&](const Expr& x) {
                if (x.is_symbol()) {
                    ++uses[x];
                    return;
                }
                if (x.is_rational() || x.is_indexed()) return;
                for (const auto& a : x.args()) walk(a);
            };
            walk(e);
        };
        for (const auto& a : r.subexpressions) note(a.value);
        for (const auto& a : r.mains) note(a.value);
        ExprMap<Expr> bind;
        std::vector<Assignment> kept;
        for (const auto& a : r.subexpressions) {
            if (!keep.count(a.target.name()) && uses[a.target] < 2 && bind.empty()) {
                bind.emplace(a.target, a.value);
                again = true;
            } else {
                kept.push_back(a);
            }
        }
        if (!again) break;
        for (auto& a : kept) a.value = substitute(a.value, bind);
        for (auto& a : r.mains) a.value = substitute(a.value, bind);
        r.subexpressions = std::move(kept);
    }
}

}  // namespace

CseResult global_cse(const std::vector<Assignment>& subs, const std::vector<Assignment>& mains,
                     const std::string& prefix) {
    std::unordered_set<std::string> keep;
    for (const auto& s : subs) keep.insert(s.target.name());
    Namer namer(prefix, subs, mains);

    CseResult best{subs, mains};
    long best_total = count_flops(best.subexpressions).total() + count_flops(best.mains).total();
    CseResult cur = best;
    for (int round = 0; round < 4; ++round) {
        CseResult next = pair_round(cur.subexpressions, cur.mains, namer);
        next = tree_round(next, namer);
        inline_single_use(next, keep);
        long total = count_flops(next.subexpressions).total() + count_flops(next.mains).total();
        if (total >= best_total) break;
        best = next;
        best_total = total;
        cur = std::move(next);
    }
    best.subexpressions = topological_order(best.subexpressions);

    // Renumber introduced symbols in definition order.
    ExprMap<Expr> rename;
    Namer clean(prefix, subs, mains);
    for (const auto& a : best.subexpressions)
        if (!keep.count(a.target.name())) rename.emplace(a.target, clean.fresh());
    if (!rename.empty()) {
        for (auto& a : best.subexpressions) {
            a.value = substitute(a.value, rename);
            if (auto it = rename.find(a.target); it != rename.end()) a.target = it->second;
        }
        for (auto& a : best.mains) a.value = substitute(a.value, rename);
    }
    return best;
}

}  // namespace lbmc::sym
