#include "lbmc/sym/ops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace lbmc::sym {

namespace {

std::vector<Expr> terms_of(const Expr& e) {
    if (e.is_sum()) return e.args();
    return {e};
}

bool has_unexpanded_factor(const Expr& t) {
    if (t.is_power()) return t.exponent() > 0 && t.base().is_sum();
    if (!t.is_product()) return false;
    for (const auto& f : t.args())
        if (f.is_sum() || (f.is_power() && f.exponent() > 0 && f.base().is_sum())) return true;
    return false;
}

Expr multiply_expanded(const Expr& a, const Expr& b);

// Folding sqrt(x)*sqrt(x) into x can bring back an unexpanded sum.
Expr reexpand(const Expr& t) {
    if (!has_unexpanded_factor(t)) return t;
    if (t.is_power()) {
        Expr r = t.base();
        for (int i = 1; i < t.exponent(); ++i) r = multiply_expanded(r, t.base());
        return r;
    }
    Expr r(1);
    for (const auto& f : t.args()) r = multiply_expanded(r, f.is_power() ? reexpand(f) : f);
    return r;
}

Expr multiply_expanded(const Expr& a, const Expr& b) {
    if (!a.is_sum() && !b.is_sum()) return reexpand(a * b);
    std::vector<Expr> out;
    auto ta = terms_of(a);
    auto tb = terms_of(b);
    out.reserve(ta.size() * tb.size());
    for (const auto& x : ta)
        for (const auto& y : tb) out.push_back(reexpand(product({x, y})));
    return sum(std::move(out));
}

struct Expander {
    std::unordered_map<const Node*, Expr> memo;

    Expr run(const Expr& e) {
        switch (e.kind()) {
            case Kind::Rational:
            case Kind::Symbol:
            case Kind::Indexed: return e;
            default: break;
        }
        if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
        Expr r;
        switch (e.kind()) {
            case Kind::Sum: {
                std::vector<Expr> ts;
                ts.reserve(e.args().size());
                for (const auto& c : e.args()) ts.push_back(run(c));
                r = sum(std::move(ts));
                break;
            }
            case Kind::Product: {
                r = Expr(1);
                for (const auto& c : e.args()) r = multiply_expanded(r, run(c));
                break;
            }
            case Kind::Power: {
                Expr b = run(e.base());
                int k = e.exponent();
                if (k > 0 && b.is_sum()) {
                    r = b;
                    for (int i = 1; i < k; ++i) r = multiply_expanded(r, b);
                } else {
                    r = pow(b, k);
                }
                break;
            }
            case Kind::Sqrt: r = sqrt(run(e.base())); break;
            case Kind::Log: r = log(run(e.base())); break;
            default: r = e;
        }
        memo.emplace(e.node(), r);
        return r;
    }
};

struct Substituter {
    const ExprMap<Expr>& bindings;
    std::unordered_map<const Node*, Expr> memo;

    Expr run(const Expr& e) {
        if (e.is_rational()) return e;
        if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
        Expr r = e;
        if (auto b = bindings.find(e); b != bindings.end()) {
            r = b->second;
        } else {
            switch (e.kind()) {
                case Kind::Sum:
                case Kind::Product: {
                    std::vector<Expr> xs;
                    xs.reserve(e.args().size());
                    bool changed = false;
                    for (const auto& c : e.args()) {
                        xs.push_back(run(c));
                        changed = changed || xs.back().node() != c.node();
                    }
                    if (changed) r = e.is_sum() ? sum(std::move(xs)) : product(std::move(xs));
                    break;
                }
                case Kind::Power: {
                    Expr b = run(e.base());
                    if (b.node() != e.base().node()) {
                        if (b.is_zero() && e.exponent() < 0) throw DomainError("substitution divides by zero");
                        r = pow(b, e.exponent());
                    }
                    break;
                }
                case Kind::Sqrt: {
                    Expr b = run(e.base());
                    if (b.node() != e.base().node()) r = sqrt(b);
                    break;
                }
                case Kind::Log: {
                    Expr b = run(e.base());
                    if (b.node() != e.base().node()) r = log(b);
                    break;
                }
                default: break;
            }
        }
        memo.emplace(e.node(), r);
        return r;
    }
};

double ipow(double b, int k) {
    unsigned n = static_cast<unsigned>(k < 0 ? -k : k);
    double r = b;
    for (unsigned i = 1; i < n; ++i) r *= b;
    return k < 0 ? 1.0 / r : r;
}

void count_into(const Expr& e, FlopCount& fc) {
    switch (e.kind()) {
        case Kind::Rational:
        case Kind::Symbol:
        case Kind::Indexed: return;
        case Kind::Sum:
            fc.adds += static_cast<long>(e.args().size()) - 1;
            for (const auto& c : e.args()) count_into(c, fc);
            return;
        case Kind::Power: {
            int k = e.exponent();
            if (k > 0) {
                fc.muls += k - 1;
            } else {
                fc.divs += 1;
                fc.muls += -k - 1;
            }
            count_into(e.base(), fc);
            return;
        }
        case Kind::Product: {
            long num = 0, den = 0;
            for (const auto& c : e.args()) {
                if (c.is_rational()) {
                    if (!c.value().abs().is_one()) ++num;
                    continue;
                }
                if (c.is_power()) {
                    int k = c.exponent();
                    fc.muls += (k > 0 ? k : -k) - 1;
                    (k > 0 ? num : den) += 1;
                    count_into(c.base(), fc);
                } else {
                    ++num;
                    count_into(c, fc);
                }
            }
            if (num > 0) {
                fc.muls += num - 1;
                fc.divs += den;
            } else if (den > 0) {
                fc.divs += 1;
                fc.muls += den - 1;
            }
            return;
        }
        case Kind::Sqrt:
            fc.sqrts += 1;
            count_into(e.base(), fc);
            return;
        case Kind::Log:
            fc.logs += 1;
            count_into(e.base(), fc);
            return;
    }
}

}  // namespace

Expr expand(const Expr& e) {
    Expander ex;
    return ex.run(e);
}

Expr collect(const Expr& e, const std::vector<Expr>& syms) {
    if (!e.is_sum() || syms.empty()) return e;
    std::vector<std::vector<Expr>> groups(syms.size());
    std::vector<Expr> rest;
    for (const auto& t : e.args()) {
        bool placed = false;
        for (std::size_t i = 0; i < syms.size() && !placed; ++i) {
            const Expr& s = syms[i];
            bool has = false;
            if (t == s) {
                has = true;
            } else if (t.is_power()) {
                has = t.base() == s && t.exponent() > 0;
            } else if (t.is_product()) {
                for (const auto& f : t.args())
                    if (f == s || (f.is_power() && f.base() == s && f.exponent() > 0)) has = true;
            }
            if (has) {
                groups[i].push_back(t / s);
                placed = true;
            }
        }
        if (!placed) rest.push_back(t);
    }
    std::vector<Expr> out;
    for (std::size_t i = 0; i < syms.size(); ++i) {
        if (groups[i].empty()) continue;
        out.push_back(syms[i] * sum(std::move(groups[i])));
    }
    for (auto& r : rest) out.push_back(std::move(r));
    return sum(std::move(out));
}

Expr substitute(const Expr& e, const ExprMap<Expr>& bindings) {
    if (bindings.empty()) return e;
    Substituter s{bindings, {}};
    return s.run(e);
}

Expr differentiate(const Expr& e, const Expr& s) {
    switch (e.kind()) {
        case Kind::Rational: return Expr(0);
        case Kind::Symbol:
        case Kind::Indexed: return e == s ? Expr(1) : Expr(0);
        default: break;
    }
    if (!contains(e, s)) return Expr(0);
    switch (e.kind()) {
        case Kind::Sum: {
            std::vector<Expr> ds;
            for (const auto& c : e.args()) ds.push_back(differentiate(c, s));
            return sum(std::move(ds));
        }
        case Kind::Product: {
            std::vector<Expr> ds;
            const auto& xs = e.args();
            for (std::size_t i = 0; i < xs.size(); ++i) {
                Expr d = differentiate(xs[i], s);
                if (d.is_zero()) continue;
                std::vector<Expr> fs{d};
                for (std::size_t j = 0; j < xs.size(); ++j)
                    if (j != i) fs.push_back(xs[j]);
                ds.push_back(product(std::move(fs)));
            }
            return sum(std::move(ds));
        }
        case Kind::Power: {
            int k = e.exponent();
            return product({Expr(k), pow(e.base(), k - 1), differentiate(e.base(), s)});
        }
        case Kind::Sqrt: return product({rat(1, 2), differentiate(e.base(), s), pow(e, -1)});
        case Kind::Log: return product({differentiate(e.base(), s), pow(e.base(), -1)});
        default: return Expr(0);
    }
}

double eval_f64(const Expr& e, const Bindings& bindings, const LeafReader& reader) {
    switch (e.kind()) {
        case Kind::Rational: return e.value().to_double();
        case Kind::Symbol: {
            auto it = bindings.find(e.name());
            if (it == bindings.end()) throw DomainError("unbound symbol '" + e.name() + "'");
            return it->second;
        }
        case Kind::Indexed:
            if (!reader) throw DomainError("no reader bound for field access " + e.str());
            return reader(e);
        case Kind::Sum: {
            double acc = 0.0;
            bool first = true;
            for (const auto& c : e.args()) {
                double v = eval_f64(c, bindings, reader);
                acc = first ? v : acc + v;
                first = false;
            }
            return acc;
        }
        case Kind::Product: {
            double acc = 1.0;
            bool first = true;
            for (const auto& c : e.args()) {
                double v = eval_f64(c, bindings, reader);
                acc = first ? v : acc * v;
                first = false;
            }
            return acc;
        }
        case Kind::Power: {
            double b = eval_f64(e.base(), bindings, reader);
            if (b == 0.0 && e.exponent() < 0) throw DomainError("division by zero in " + e.str());
            return ipow(b, e.exponent());
        }
        case Kind::Sqrt: {
            double a = eval_f64(e.base(), bindings, reader);
            if (a < 0.0) throw DomainError("sqrt of negative value in " + e.str());
            return std::sqrt(a);
        }
        case Kind::Log: {
            double a = eval_f64(e.base(), bindings, reader);
            if (a <= 0.0) throw DomainError("log of non-positive value in " + e.str());
            return std::log(a);
        }
    }
    return 0.0;
}

FlopCount count_flops(const Expr& e) {
    FlopCount fc;
    count_into(e, fc);
    return fc;
}

FlopCount count_flops(const std::vector<Assignment>& assignments) {
    FlopCount fc;
    for (const auto& a : assignments) count_into(a.value, fc);
    return fc;
}

std::vector<Expr> inline_all(const std::vector<Assignment>& subs, const std::vector<Assignment>& mains) {
    ExprMap<Expr> defs;
    for (const auto& s : subs) defs[s.target] = substitute(s.value, defs);
    std::vector<Expr> out;
    out.reserve(mains.size());
    for (const auto& m : mains) out.push_back(substitute(m.value, defs));
    return out;
}

std::vector<Assignment> topological_order(const std::vector<Assignment>& subs) {
    ExprMap<std::size_t> index;
    for (std::size_t i = 0; i < subs.size(); ++i) index[subs[i].target] = i;
    std::vector<std::vector<std::size_t>> deps(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
        for (const auto& leaf : free_symbols(subs[i].value)) {
            auto it = index.find(leaf);
            if (it != index.end() && it->second != i) deps[i].push_back(it->second);
        }
    }
    std::vector<int> state(subs.size(), 0);
    std::vector<Assignment> out;
    out.reserve(subs.size());
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
        if (state[i] == 2) return;
        if (state[i] == 1) throw DomainError("cyclic subexpression " + subs[i].target.str());
        state[i] = 1;
        std::sort(deps[i].begin(), deps[i].end());
        for (auto d : deps[i]) visit(d);
        state[i] = 2;
        out.push_back(subs[i]);
    };
    for (std::size_t i = 0; i < subs.size(); ++i) visit(i);
    return out;
}

}  // namespace lbmc::sym
