#include "lbmc/methods/cumulant.hpp"

#include <algorithm>
#include <set>

#include "lbmc/error.hpp"

namespace lbmc::methods {

using sym::Rational;

Expr cumulant_equilibrium(const MomentPoly& p, int d, const equilibria::EquilibriumSpec& eq) {
    std::vector<Expr> ts;
    for (const auto& [e, c] : p.terms()) {
        int deg = e[0] + e[1] + e[2];
        int i = detail::first_nonzero(e);
        if (deg == 0) {
            ts.push_back(Expr(c) * equilibria::rho());
        } else if (deg == 1) {
            ts.push_back(Expr(c) * equilibria::velocity(i));
        } else if (deg == 2 && e[i] == 2) {
            ts.push_back(Expr(c) * Expr(eq.cs2));
        }
    }
    (void)d;
    return sym::sum(std::move(ts));
}

std::vector<Exponents> cumulant_indices(const MethodSpec& m) {
    std::set<Exponents> all;
    for (const auto& e : m.entries)
        for (const auto& [x, c] : e.poly.terms()) all.insert(x);
    std::vector<Exponents> out(all.begin(), all.end());
    std::sort(out.begin(), out.end(), detail::moment_index_less);
    return out;
}

std::string index_name(const std::string& prefix, const Exponents& e, int d) {
    std::string s = prefix + "_";
    for (int i = 0; i < d; ++i) s += std::to_string(e[i]);
    return s;
}

void assemble_cumulant_outputs(const MethodSpec& m, const std::vector<Expr>& rates, CollisionRule& rule) {
    const auto& s = m.stencil;
    const int d = s.d;
    auto idx = cumulant_indices(m);
    if (static_cast<int>(idx.size()) != s.q)
        throw SingularError("cumulant basis of " + s.name + " does not use exactly q monomials");
    for (const auto& e : idx) {
        Exponents below = e;
        for (int i = 0; i < 3; ++i)
            if (below[i] > 0) {
                Exponents x = e;
                x[i] -= 1;
                if (std::find(idx.begin(), idx.end(), x) == idx.end())
                    throw ConfigError("cumulant basis of " + s.name + " is missing lower moment " +
                                      moments::MomentPoly::monomial(x).str());
            }
    }

    const Expr rho = rule.density;
    auto f = rule.pre;

    // Normalized raw moments.
    std::map<Exponents, Expr> mt;
    for (const auto& e : idx) {
        if (e == Exponents{0, 0, 0}) {
            mt[e] = Expr(1);
            continue;
        }
        Expr sym_m = sym::sym(index_name("m", e, d));
        rule.subexpressions.push_back(
            {sym_m, moments::discrete_moment(moments::MomentPoly::monomial(e), s, f) / rho});
        mt[e] = sym_m;
    }

    // Cumulants by the moment recursion, each bound to a symbol.
    std::map<Exponents, Expr> k;
    for (const auto& e : idx) {
        int i = detail::first_nonzero(e);
        if (i < 0) {
            k[e] = Expr(0);
            continue;
        }
        Exponents ei{0, 0, 0};
        ei[i] = 1;
        Exponents n = detail::minus(e, ei);
        Expr acc = mt.at(e);
        detail::for_each_below(n, [&](const Exponents& kk, long c) {
            if (kk == n) return;
            Exponents up = kk;
            up[i] += 1;
            acc = acc - Expr(Rational(c)) * k.at(up) * mt.at(detail::minus(n, kk));
        });
        if (e[0] + e[1] + e[2] == 1) {
            k[e] = mt.at(e);
            continue;
        }
        Expr ks = sym::sym(index_name("k", e, d));
        rule.subexpressions.push_back({ks, acc});
        k[e] = ks;
    }

    // Relax the polynomial combinations, then map back to monomials.
    const int q = s.q;
    moments::RMatrix A(q, q);
    for (int j = 0; j < q; ++j)
        for (const auto& [e, c] : m.entries[static_cast<std::size_t>(j)].poly.terms()) {
            int col = static_cast<int>(std::find(idx.begin(), idx.end(), e) - idx.begin());
            A(j, col) = c;
        }
    moments::RMatrix Ainv = A.inverse();
    std::vector<Expr> kp_poly;
    for (int j = 0; j < q; ++j) {
        const auto& en = m.entries[static_cast<std::size_t>(j)];
        std::vector<Expr> ts;
        for (const auto& [e, c] : en.poly.terms()) ts.push_back(Expr(c) * k.at(e));
        Expr kappa = sym::sum(std::move(ts));
        const Expr& w = rates[static_cast<std::size_t>(j)];
        kp_poly.push_back(w.is_zero() ? kappa : kappa + w * (en.equilibrium - kappa));
    }
    std::map<Exponents, Expr> kp;
    for (int c = 0; c < q; ++c) {
        const Exponents& e = idx[static_cast<std::size_t>(c)];
        int deg = e[0] + e[1] + e[2];
        if (deg <= 1) {
            kp[e] = k.at(e);
            continue;
        }
        std::vector<Expr> ts;
        for (int j = 0; j < q; ++j)
            if (!Ainv(c, j).is_zero()) ts.push_back(Expr(Ainv(c, j)) * kp_poly[static_cast<std::size_t>(j)]);
        Expr ks = sym::sym(index_name("kp", e, d));
        rule.subexpressions.push_back({ks, sym::sum(std::move(ts))});
        kp[e] = ks;
    }

    // Back to normalized raw moments.
    std::map<Exponents, Expr> mp;
    for (const auto& e : idx) {
        int i = detail::first_nonzero(e);
        if (i < 0) {
            mp[e] = Expr(1);
            continue;
        }
        if (e[0] + e[1] + e[2] == 1) {
            mp[e] = kp.at(e);
            continue;
        }
        Exponents ei{0, 0, 0};
        ei[i] = 1;
        Exponents n = detail::minus(e, ei);
        Expr acc = kp.at(e);
        detail::for_each_below(n, [&](const Exponents& kk, long c) {
            if (kk == n) return;
            Exponents up = kk;
            up[i] += 1;
            acc = acc + Expr(Rational(c)) * kp.at(up) * mp.at(detail::minus(n, kk));
        });
        Expr ms = sym::sym(index_name("mp", e, d));
        rule.subexpressions.push_back({ms, acc});
        mp[e] = ms;
    }

    std::vector<MomentPoly> monos;
    for (const auto& e : idx) monos.push_back(MomentPoly::monomial(e));
    auto basis = moments::build_basis(monos, s);
    for (int qq = 0; qq < q; ++qq) {
        std::vector<Expr> ts;
        for (int c = 0; c < q; ++c) {
            const Rational& v = basis.M_inv(qq, c);
            if (!v.is_zero()) ts.push_back(Expr(v) * mp.at(idx[static_cast<std::size_t>(c)]));
        }
        rule.outputs.push_back({rule.post[static_cast<std::size_t>(qq)], rho * sym::sum(std::move(ts))});
    }
}

}  // namespace lbmc::methods
