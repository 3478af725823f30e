#include "lbmc/simplify/simplify.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lbmc/error.hpp"

namespace lbmc::simplify {

using sym::Assignment;
using sym::Expr;
using sym::Kind;
using sym::Rational;

namespace {

FlopCount rule_flops(const CollisionRule& r) {
    FlopCount fc = sym::count_flops(r.subexpressions);
    fc += sym::count_flops(r.outputs);
    return fc;
}

std::vector<Expr> terms_of(const Expr& e) { return e.is_sum() ? e.args() : std::vector<Expr>{e}; }

/// Rebuilds an expression bottom-up and lets `fn` rewrite every node after
/// its children have been rebuilt.
class Rewriter {
public:
    explicit Rewriter(std::function<Expr(const Expr&)> fn) : fn_(std::move(fn)) {}

    Expr run(const Expr& e) {
        if (e.is_rational() || e.is_symbol() || e.kind() == Kind::Indexed) return fn_(e);
        if (auto it = memo_.find(e.node()); it != memo_.end()) return it->second;
        Expr r;
        switch (e.kind()) {
            case Kind::Sum:
            case Kind::Product: {
                std::vector<Expr> xs;
                for (const auto& c : e.args()) xs.push_back(run(c));
                r = e.is_sum() ? sym::sum(std::move(xs)) : sym::product(std::move(xs));
                break;
            }
            case Kind::Power: r = sym::pow(run(e.base()), e.exponent()); break;
            case Kind::Sqrt: r = sym::sqrt(run(e.base())); break;
            case Kind::Log: r = sym::log(run(e.base())); break;
            default: r = e;
        }
        r = fn_(r);
        alive_.push_back(e);
        memo_.emplace(e.node(), r);
        return r;
    }

private:
    std::function<Expr(const Expr&)> fn_;
    std::unordered_map<const sym::Node*, Expr> memo_;
    std::vector<Expr> alive_;
};

CollisionRule map_outputs(const CollisionRule& r, const std::function<Expr(const Expr&)>& fn) {
    CollisionRule out = r;
    for (auto& o : out.outputs) o.value = fn(o.value);
    return out;
}

/// Coefficient of the term whose non-rational part equals `rest`.
bool coefficient_of(const Expr& s, const Expr& rest, Rational& c) {
    for (const auto& t : terms_of(s)) {
        auto [k, r] = sym::split_coefficient(t);
        if (r == rest) {
            c = k;
            return true;
        }
    }
    return false;
}

/// Occurrence count of each term, for exact multiset matching.
std::map<Expr, int, sym::ExprLess> term_multiset(const Expr& s) {
    std::map<Expr, int, sym::ExprLess> m;
    for (const auto& t : terms_of(s)) m[t] += 1;
    return m;
}

}  // namespace

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::OnlyCse: return "only_cse";
        case Strategy::CustomDirection: return "custom_direction";
        case Strategy::CustomDefault: return "custom_default";
    }
    return "";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "only_cse") return Strategy::OnlyCse;
    if (name == "custom_direction") return Strategy::CustomDirection;
    if (name == "custom_default") return Strategy::CustomDefault;
    throw ConfigError("unknown strategy '" + name + "' (expected only_cse, custom_direction, custom_default or best)");
}

CollisionRule expand_outputs(const CollisionRule& r) {
    return map_outputs(r, [](const Expr& e) { return sym::expand(e); });
}

CollisionRule replace_quadratic_velocity_products(const CollisionRule& r) {
    CollisionRule out = r;
    const auto& u = r.velocity;
    std::map<std::pair<int, int>, Expr> pair_sym;
    auto index_of = [&](const Expr& f) -> int {
        for (std::size_t i = 0; i < u.size(); ++i)
            if (f == u[i]) return static_cast<int>(i);
        return -1;
    };
    Rewriter rw([&](const Expr& e) -> Expr {
        if (!e.is_product()) return e;
        int a = -1, b = -1;
        for (const auto& f : e.args()) {
            int i = index_of(f);
            if (i < 0) continue;
            if (a < 0)
                a = i;
            else if (b < 0)
                b = i;
        }
        if (a < 0 || b < 0) return e;
        if (a > b) std::swap(a, b);
        auto key = std::make_pair(a, b);
        auto it = pair_sym.find(key);
        if (it == pair_sym.end())
            it = pair_sym.emplace(key, sym::sym("e_" + std::to_string(a) + std::to_string(b))).first;
        std::vector<Expr> rest;
        bool dropped_a = false, dropped_b = false;
        for (const auto& f : e.args()) {
            if (!dropped_a && f == u[a]) {
                dropped_a = true;
                continue;
            }
            if (!dropped_b && f == u[b]) {
                dropped_b = true;
                continue;
            }
            rest.push_back(f);
        }
        const Expr& s = it->second;
        rest.push_back(sym::rat(1, 2) * (s * s - u[a] * u[a] - u[b] * u[b]));
        return sym::product(std::move(rest));
    });
    for (auto& o : out.outputs) o.value = rw.run(o.value);
    for (const auto& [k, s] : pair_sym) out.subexpressions.push_back({s, u[k.first] + u[k.second]});
    return out;
}

CollisionRule factor_rates(const CollisionRule& r) {
    return map_outputs(r, [&](const Expr& e) { return sym::collect(e, r.rates); });
}

Expr common_quadratic_term(const CollisionRule& r) {
    int center = r.stencil.index_of({0, 0, 0});
    if (center < 0 || r.outputs.empty()) return Expr(0);
    sym::ExprMap<Expr> sub;
    for (const auto& f : r.pre) sub[f] = Expr(0);
    for (const auto& w : r.rates) sub[w] = Expr(1);
    Expr t = sym::expand(sym::substitute(r.outputs[static_cast<std::size_t>(center)].value, sub));
    Rational w;
    if (!coefficient_of(t, r.density, w) || w.is_zero()) return Expr(0);
    return sym::expand(t / Expr(w));
}

CollisionRule extract_common_quadratic_term(const CollisionRule& r) {
    Expr T = common_quadratic_term(r);
    if (!T.is_sum()) return r;
    for (const auto& leaf : sym::free_symbols(T))
        if (std::find(r.pre.begin(), r.pre.end(), leaf) != r.pre.end()) return r;
    CollisionRule out = r;
    Expr target = sym::sym("f_eq_common");
    bool used = false;
    auto t_terms = terms_of(T);
    Rewriter rw([&](const Expr& e) -> Expr {
        if (!e.is_sum()) return e;
        Expr best = e;
        long best_cost = sym::count_flops(e).total();
        for (const auto& tt : t_terms) {
            auto [a, rest] = sym::split_coefficient(tt);
            Rational b;
            if (!coefficient_of(e, rest, b)) continue;
            Expr kk(b / a);
            Expr cand = sym::sum({e, -kk * T, kk * target});
            long cost = sym::count_flops(cand).total();
            if (cost < best_cost) {
                best = cand;
                best_cost = cost;
            }
        }
        if (!(best == e)) used = true;
        return best;
    });
    for (auto& o : out.outputs) o.value = rw.run(o.value);
    if (used) out.subexpressions.push_back({target, T});
    else return r;
    return out;
}

namespace {

struct Pattern {
    Expr sum;          // value pattern
    Expr replacement;  // what a unit multiple of `sum` becomes
};

std::vector<Pattern> subexpression_patterns(const CollisionRule& r) {
    std::vector<Pattern> ps;
    for (const auto& a : r.subexpressions) {
        const Expr& v = a.value;
        if (v.is_sum()) {
            ps.push_back({v, a.target});
        } else if (v.is_product()) {
            // target = S * Y with a single sum factor S, so S = target / Y.
            Expr S;
            std::vector<Expr> others;
            int sums = 0;
            for (const auto& f : v.args()) {
                if (f.is_sum()) {
                    S = f;
                    ++sums;
                } else {
                    others.push_back(f);
                }
            }
            if (sums == 1) ps.push_back({S, a.target / sym::product(others)});
        }
    }
    return ps;
}

/// Replaces one multiple m*P of a pattern inside a sum, if that lowers the
/// operation count.
bool replace_once(Expr& s, const Pattern& p) {
    auto ms = term_multiset(s);
    const auto& pt = p.sum.args();
    for (const auto& [t, cnt] : ms) {
        Expr m = t / pt.front();
        bool all = true;
        for (std::size_t j = 1; j < pt.size() && all; ++j) {
            auto it = ms.find(m * pt[j]);
            all = it != ms.end();
        }
        if (!all) continue;
        Expr cand = sym::sum({s, -(m * p.sum), m * p.replacement});
        if (sym::count_flops(cand).total() < sym::count_flops(s).total()) {
            s = cand;
            return true;
        }
    }
    return false;
}

}  // namespace

CollisionRule substitute_existing_subexpressions(const CollisionRule& r) {
    auto patterns = subexpression_patterns(r);
    if (patterns.empty()) return r;
    Rewriter rw([&](const Expr& e) -> Expr {
        if (!e.is_sum()) return e;
        Expr s = e;
        for (int guard = 0; guard < 64; ++guard) {
            bool changed = false;
            for (const auto& p : patterns) {
                if (replace_once(s, p)) {
                    changed = true;
                    break;
                }
            }
            if (!changed || !s.is_sum()) break;
        }
        return s;
    });
    return map_outputs(r, [&](const Expr& e) { return rw.run(e); });
}

namespace {

struct PairSplitter {
    std::vector<Assignment>& subs;
    int counter = 0;

    Expr name() { return sym::sym("d_" + std::to_string(counter++)); }

    Expr bind(const Expr& v) {
        if (!v.is_sum()) return v;
        Expr s = name();
        subs.push_back({s, v});
        return s;
    }

    /// Rewrites a, b as E + O + ra and E - O + rb.
    void split(Expr& a, Expr& b) {
        auto ta = terms_of(a);
        auto tb = terms_of(b);
        std::vector<bool> used(tb.size(), false);
        std::vector<Expr> even, odd, ra, rb;
        for (const auto& t : ta) {
            bool placed = false;
            for (std::size_t j = 0; j < tb.size() && !placed; ++j) {
                if (used[j]) continue;
                if (tb[j] == t) {
                    even.push_back(t);
                    used[j] = placed = true;
                } else if (tb[j] == -t) {
                    odd.push_back(t);
                    used[j] = placed = true;
                }
            }
            if (placed) continue;
            // Same outer factor around two different sums: split the inner sums.
            auto outer = [](const Expr& x, Expr& inner) -> std::optional<Expr> {
                if (!x.is_product()) return std::nullopt;
                std::vector<Expr> others;
                int sums = 0;
                for (const auto& f : x.args()) {
                    if (f.is_sum()) {
                        inner = f;
                        ++sums;
                    } else {
                        others.push_back(f);
                    }
                }
                if (sums != 1) return std::nullopt;
                return sym::product(others);
            };
            Expr ia;
            auto xa = outer(t, ia);
            if (xa) {
                for (std::size_t j = 0; j < tb.size() && !placed; ++j) {
                    if (used[j]) continue;
                    Expr ib;
                    auto xb = outer(tb[j], ib);
                    if (!xb || !(*xb == *xa)) continue;
                    Expr ja = ia;
                    split(ja, ib);
                    ra.push_back(*xa * ja);
                    rb.push_back(*xa * ib);
                    used[j] = placed = true;
                }
            }
            if (!placed) ra.push_back(t);
        }
        for (std::size_t j = 0; j < tb.size(); ++j)
            if (!used[j]) rb.push_back(tb[j]);
        if (even.empty() && odd.empty()) return;
        Expr E = bind(sym::sum(even));
        Expr O = bind(sym::sum(odd));
        ra.push_back(E);
        ra.push_back(O);
        rb.push_back(E);
        rb.push_back(-O);
        a = sym::sum(std::move(ra));
        b = sym::sum(std::move(rb));
    }
};

}  // namespace

CollisionRule direction_aware_cse(const CollisionRule& r) {
    CollisionRule out = r;
    const auto& s = r.stencil;
    if (static_cast<int>(r.outputs.size()) == s.q) {
        PairSplitter ps{out.subexpressions};
        for (int q = 0; q < s.q; ++q) {
            int o = s.opp.empty() ? -1 : s.opp[static_cast<std::size_t>(q)];
            if (o <= q) continue;
            ps.split(out.outputs[static_cast<std::size_t>(q)].value, out.outputs[static_cast<std::size_t>(o)].value);
        }
    }
    return global_cse(out);
}

namespace {

/// Drops subexpressions that neither the outputs nor the macroscopic
/// quantities depend on.
void prune_unused(CollisionRule& r) {
    std::unordered_set<std::string> live;
    auto mark = [&](const Expr& e) {
        for (const auto& leaf : sym::free_symbols(e))
            if (leaf.is_symbol()) live.insert(leaf.name());
    };
    for (const auto& o : r.outputs) mark(o.value);
    if (r.density.is_symbol()) live.insert(r.density.name());
    for (const auto& u : r.velocity)
        if (u.is_symbol()) live.insert(u.name());
    std::vector<Assignment> kept;
    for (auto it = r.subexpressions.rbegin(); it != r.subexpressions.rend(); ++it) {
        if (!live.count(it->target.name())) continue;
        mark(it->value);
        kept.push_back(*it);
    }
    std::reverse(kept.begin(), kept.end());
    r.subexpressions = std::move(kept);
}

}  // namespace

CollisionRule global_cse(const CollisionRule& r) {
    CollisionRule out = r;
    auto res = sym::global_cse(r.subexpressions, r.outputs);
    out.subexpressions = std::move(res.subexpressions);
    out.outputs = std::move(res.mains);
    prune_unused(out);
    return out;
}

Simplified run_strategy(const CollisionRule& r, Strategy st) {
    Simplified s{r, {{}, strategy_name(st)}};
    auto stage = [&](const std::string& name, const std::function<CollisionRule(const CollisionRule&)>& fn) {
        s.rule = fn(s.rule);
        s.report.stages.push_back({name, rule_flops(s.rule)});
    };
    s.report.stages.push_back({"initial", rule_flops(r)});
    if (st == Strategy::OnlyCse) {
        stage("cse", global_cse);
        return s;
    }
    stage("expand", expand_outputs);
    stage("quadratic velocity prod.", replace_quadratic_velocity_products);
    stage("expand", expand_outputs);
    stage("factor rates", factor_rates);
    stage("common quadratic term", extract_common_quadratic_term);
    stage("substitute existing subexpr.", substitute_existing_subexpressions);
    if (st == Strategy::CustomDirection)
        stage("direction cse", direction_aware_cse);
    else
        stage("cse", global_cse);
    return s;
}

Simplified select_best(const CollisionRule& r) {
    Simplified best = run_strategy(r, Strategy::OnlyCse);
    for (Strategy st : {Strategy::CustomDirection, Strategy::CustomDefault}) {
        Simplified c = run_strategy(r, st);
        if (c.report.final_flops().total() < best.report.final_flops().total()) best = std::move(c);
    }
    return best;
}

std::string render_report(const SimplificationReport& rep) {
    std::size_t w = 8;
    for (const auto& s : rep.stages) w = std::max(w, s.name.size());
    std::ostringstream os;
    os << "strategy: " << rep.strategy << '\n';
    os << std::left << std::setw(static_cast<int>(w)) << "stage" << std::right << std::setw(8) << "adds"
       << std::setw(8) << "muls" << std::setw(8) << "divs" << std::setw(8) << "sqrts" << std::setw(8) << "logs"
       << std::setw(8) << "total" << '\n';
    for (const auto& s : rep.stages) {
        os << std::left << std::setw(static_cast<int>(w)) << s.name << std::right << std::setw(8) << s.flops.adds
           << std::setw(8) << s.flops.muls << std::setw(8) << s.flops.divs << std::setw(8) << s.flops.sqrts
           << std::setw(8) << s.flops.logs << std::setw(8) << s.flops.total() << '\n';
    }
    return os.str();
}

}  // namespace lbmc::simplify
