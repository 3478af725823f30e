#include "lbmc/methods/method.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "lbmc/error.hpp"
#include "lbmc/methods/cumulant.hpp"

namespace lbmc::methods {

using equilibria::EquilibriumSpec;
using moments::Exponents;
using sym::Rational;

namespace {

bool is_conserved(const MomentPoly& p) { return p.order() <= 1; }

void check_rate(const Expr& rate, const MomentPoly& p) {
    if (!rate.is_rational() || is_conserved(p)) return;
    const Rational& r = rate.value();
    if (r <= Rational(0) || r >= Rational(2))
        throw ConfigError("relaxation rate " + r.str() + " for moment " + p.str() + " is outside (0, 2)");
}

std::vector<RelaxationInfo> make_entries(const std::vector<MomentPoly>& polys, const lattice::Stencil& s,
                                         const EquilibriumSpec& eq, const std::vector<Expr>& rates) {
    std::vector<RelaxationInfo> out;
    for (std::size_t i = 0; i < polys.size(); ++i) {
        check_rate(rates[i], polys[i]);
        out.push_back({polys[i], equilibria::continuous_equilibrium_moment(polys[i], s.d, eq), rates[i]});
    }
    return out;
}

Expr rate_for_group(const RateMap& rates, const MomentPoly& p, int d) {
    std::string g = moment_group(p, d);
    if (g == "conserved") {
        auto it = rates.find("conserved");
        return it == rates.end() ? Expr(0) : it->second;
    }
    auto it = rates.find(g);
    if (it == rates.end()) throw ConfigError("no relaxation rate given for group '" + g + "' (moment " + p.str() + ")");
    return it->second;
}

MomentPoly second_order_part(const MomentPoly& p) {
    MomentPoly out;
    for (const auto& [e, c] : p.terms())
        if (e[0] + e[1] + e[2] == 2) out = out + MomentPoly::monomial(e, c);
    return out;
}

}  // namespace

sym::FlopCount CollisionRule::flops() const {
    sym::FlopCount fc = sym::count_flops(subexpressions);
    fc += sym::count_flops(outputs);
    return fc;
}

bool is_even_moment(const MomentPoly& p) {
    for (const auto& [e, c] : p.terms())
        if ((e[0] + e[1] + e[2]) % 2 != 0) return false;
    return true;
}

bool is_bulk_moment(const MomentPoly& p, int d) {
    if (p.order() != 2) return false;
    MomentPoly s = second_order_part(p);
    const auto& t = s.terms();
    if (static_cast<int>(t.size()) != d) return false;
    Rational first = t.begin()->second;
    for (int i = 0; i < d; ++i) {
        Exponents e{0, 0, 0};
        e[i] = 2;
        auto it = t.find(e);
        if (it == t.end() || !(it->second == first)) return false;
    }
    return true;
}

bool is_shear_moment(const MomentPoly& p, int d) { return p.order() == 2 && !is_bulk_moment(p, d); }

std::string moment_group(const MomentPoly& p, int d) {
    if (is_conserved(p)) return "conserved";
    if (is_bulk_moment(p, d)) return "bulk";
    if (is_shear_moment(p, d)) return "shear";
    return std::to_string(p.order());
}

MethodSpec create_srt(const lattice::Stencil& s, const Expr& omega, const EquilibriumSpec& eq) {
    auto polys = moments::default_monomial_basis(s);
    MethodSpec m{s, Space::Moment, make_entries(polys, s, eq, std::vector<Expr>(polys.size(), omega)), eq, {}};
    return m;
}

MethodSpec create_trt(const lattice::Stencil& s, const Expr& omega_even, const Expr& omega_odd,
                      const EquilibriumSpec& eq) {
    auto polys = moments::default_monomial_basis(s);
    std::vector<Expr> rates;
    for (const auto& p : polys) rates.push_back(is_even_moment(p) ? omega_even : omega_odd);
    return MethodSpec{s, Space::Moment, make_entries(polys, s, eq, rates), eq, {}};
}

MethodSpec create_mrt(const lattice::Stencil& s, const RateMap& rates, bool weighted, const EquilibriumSpec& eq) {
    auto polys = moments::gram_schmidt(moments::split_shear_bulk(moments::default_monomial_basis(s), s.d), s, weighted);
    std::vector<Expr> rs;
    for (const auto& p : polys) rs.push_back(rate_for_group(rates, p, s.d));
    return MethodSpec{s, Space::Moment, make_entries(polys, s, eq, rs), eq, {}};
}

MethodSpec create_cumulant(const lattice::Stencil& s, const RateMap& rates, const EquilibriumSpec& eq) {
    if (s.name == "D3Q15") throw ConfigError("cumulant methods are not supported on D3Q15");
    if (!eq.compressible) throw ConfigError("cumulant methods require a compressible equilibrium");
    auto polys = moments::split_shear_bulk(moments::default_monomial_basis(s), s.d);
    MethodSpec m;
    m.stencil = s;
    m.space = Space::Cumulant;
    m.eq = eq;
    for (const auto& p : polys) {
        Expr r = rate_for_group(rates, p, s.d);
        check_rate(r, p);
        m.entries.push_back({p, cumulant_equilibrium(p, s.d, eq), r});
    }
    return m;
}

namespace {

/// Replaces compound rates by symbols defined as subexpressions.
std::vector<Expr> hoist_rates(const MethodSpec& m, std::vector<Assignment>& subs, std::vector<Expr>& rate_syms) {
    std::vector<Expr> out;
    sym::ExprMap<Expr> hoisted;
    for (const auto& d : m.rate_definitions) rate_syms.push_back(d.target);
    for (const auto& e : m.entries) {
        const Expr& r = e.rate;
        if (r.is_rational() || r.is_symbol()) {
            out.push_back(r);
            if (r.is_symbol() && std::find(rate_syms.begin(), rate_syms.end(), r) == rate_syms.end())
                rate_syms.push_back(r);
            continue;
        }
        auto it = hoisted.find(r);
        if (it == hoisted.end()) {
            Expr s = sym::sym("omega_r" + std::to_string(hoisted.size()));
            subs.push_back({s, r});
            rate_syms.push_back(s);
            it = hoisted.emplace(r, s).first;
        }
        out.push_back(it->second);
    }
    return out;
}

}  // namespace

CollisionRule assemble_collision_rule(const MethodSpec& m) {
    const auto& s = m.stencil;
    CollisionRule rule;
    rule.stencil = s;
    rule.pre = equilibria::pdfs(s.q);
    rule.post = equilibria::post_pdfs(s.q);
    rule.density = equilibria::rho();
    rule.velocity = equilibria::velocities(s.d);
    rule.compressible = m.eq.compressible;

    auto mac = equilibria::macroscopic_values(s, m.eq);
    rule.subexpressions.push_back({rule.density, mac.rho});
    for (int i = 0; i < s.d; ++i) rule.subexpressions.push_back({rule.velocity[i], mac.u[i]});
    for (const auto& d : m.rate_definitions) rule.subexpressions.push_back(d);
    std::vector<Expr> rates = hoist_rates(m, rule.subexpressions, rule.rates);

    if (m.space == Space::Cumulant) {
        assemble_cumulant_outputs(m, rates, rule);
        return rule;
    }

    std::vector<MomentPoly> polys;
    for (const auto& e : m.entries) polys.push_back(e.poly);
    auto basis = moments::build_basis(polys, s);
    const auto& f = rule.pre;

    // f' = M^-1 (m - S m + S m_eq), left unexpanded.
    std::vector<Expr> relaxed;
    for (std::size_t k = 0; k < polys.size(); ++k) {
        Expr mk = moments::discrete_moment(polys[k], s, f);
        const Expr& w = rates[k];
        relaxed.push_back(w.is_zero() ? mk : mk - w * mk + w * m.entries[k].equilibrium);
    }
    for (int q = 0; q < s.q; ++q) {
        std::vector<Expr> ts;
        for (int k = 0; k < s.q; ++k) {
            const Rational& c = basis.M_inv(q, k);
            if (!c.is_zero()) ts.push_back(Expr(c) * relaxed[static_cast<std::size_t>(k)]);
        }
        rule.outputs.push_back({rule.post[static_cast<std::size_t>(q)], sym::sum(std::move(ts))});
    }
    return rule;
}

std::vector<Expr> conservation_defects(const CollisionRule& rule) {
    const auto& s = rule.stencil;
    const int n = s.d + 1;
    // Unknowns: the rest population and the +e_i populations.
    std::vector<int> unknown{0};
    for (int i = 0; i < s.d; ++i) {
        lattice::Vec e{0, 0, 0};
        e[i] = 1;
        unknown.push_back(s.index_of(e));
    }
    moments::RMatrix A(n, n);
    for (int j = 0; j < n; ++j) {
        const auto& c = s.c[static_cast<std::size_t>(unknown[static_cast<std::size_t>(j)])];
        A(0, j) = Rational(1);
        for (int i = 0; i < s.d; ++i) A(i + 1, j) = Rational(c[i]);
    }
    moments::RMatrix Ainv = A.inverse();
    Expr rho0 = rule.compressible ? rule.density : Expr(1);
    std::vector<Expr> rhs;
    for (int r = 0; r < n; ++r) {
        std::vector<Expr> ts{r == 0 ? rule.density : rho0 * rule.velocity[static_cast<std::size_t>(r - 1)]};
        for (int q = 0; q < s.q; ++q) {
            if (std::find(unknown.begin(), unknown.end(), q) != unknown.end()) continue;
            int coef = r == 0 ? 1 : s.c[q][r - 1];
            if (coef != 0) ts.push_back(Expr(-coef) * rule.pre[static_cast<std::size_t>(q)]);
        }
        rhs.push_back(sym::sum(std::move(ts)));
    }
    sym::ExprMap<Expr> elim;
    for (int j = 0; j < n; ++j) {
        std::vector<Expr> ts;
        for (int r = 0; r < n; ++r)
            if (!Ainv(j, r).is_zero()) ts.push_back(Expr(Ainv(j, r)) * rhs[static_cast<std::size_t>(r)]);
        elim[rule.pre[static_cast<std::size_t>(unknown[static_cast<std::size_t>(j)])]] = sym::sum(std::move(ts));
    }
    std::vector<Expr> post;
    for (const auto& o : rule.outputs) post.push_back(sym::substitute(o.value, elim));
    std::vector<Expr> defects;
    for (int r = 0; r < n; ++r) {
        std::vector<Expr> ts;
        for (int q = 0; q < s.q; ++q) {
            int coef = r == 0 ? 1 : s.c[q][r - 1];
            if (coef != 0)
                ts.push_back(Expr(coef) * (post[static_cast<std::size_t>(q)] -
                                           sym::substitute(rule.pre[static_cast<std::size_t>(q)], elim)));
        }
        defects.push_back(sym::expand(sym::sum(std::move(ts))));
    }
    return defects;
}

Expr nonequilibrium_stress(const MethodSpec& m, int i, int j) {
    Exponents e{0, 0, 0};
    e[i] += 1;
    e[j] += 1;
    MomentPoly p = MomentPoly::monomial(e);
    Expr feq_moment = equilibria::continuous_equilibrium_moment(p, m.stencil.d, m.eq);
    return moments::discrete_moment(p, m.stencil, equilibria::pdfs(m.stencil.q)) - feq_moment;
}

namespace {

/// sqrt(2 sum_ij Pi_ij^2) and the density used in the strain relation.
std::pair<Expr, Expr> stress_norm(const MethodSpec& m) {
    std::vector<Expr> ts;
    for (int i = 0; i < m.stencil.d; ++i)
        for (int j = 0; j < m.stencil.d; ++j) {
            Expr pi = nonequilibrium_stress(m, i, j);
            ts.push_back(pi * pi);
        }
    Expr rho0 = m.eq.compressible ? equilibria::rho() : Expr(1);
    return {sym::sqrt(2 * sym::sum(std::move(ts))), rho0};
}

}  // namespace

Expr smagorinsky_rate(const Expr& nu0, const Expr& c_s, const MethodSpec& m) {
    // With |S| = 3 w P / (2 rho) the rate equation becomes the quadratic
    // (9 C^2 P / rho) w^2 + (6 nu0 + 1) w - 2 = 0; the positive root is taken
    // in the form that stays finite for P -> 0.
    auto [P, rho0] = stress_norm(m);
    Expr b = 6 * nu0 + 1;
    return 4 / (b + sym::sqrt(b * b + 72 * c_s * c_s * P / rho0));
}

Expr smagorinsky_residual(const Expr& omega, const Expr& nu0, const Expr& c_s, const MethodSpec& m) {
    auto [P, rho0] = stress_norm(m);
    Expr strain = 3 * omega * P / (2 * rho0);
    return omega * (6 * c_s * c_s * strain + 6 * nu0 + 1) - 2;
}

Expr viscosity_from_rate(const Expr& omega, const Rational& cs2) {
    if (omega.is_zero()) throw DomainError("relaxation rate 0 has no viscosity");
    return Expr(cs2) * (1 / omega - sym::rat(1, 2));
}

Expr rate_from_viscosity(const Expr& nu, const Rational& cs2) { return 1 / (nu / Expr(cs2) + sym::rat(1, 2)); }

std::vector<double> CollisionRule::evaluate(const sym::Bindings& inputs) const {
    sym::Bindings b = inputs;
    for (const auto& a : subexpressions) b[a.target.name()] = sym::eval_f64(a.value, b);
    std::vector<double> out;
    for (const auto& a : outputs) out.push_back(sym::eval_f64(a.value, b));
    return out;
}

std::string tableau(const MethodSpec& m) {
    std::vector<std::array<std::string, 3>> rows{{"Moment", "Equilibrium", "Relaxation rate"}};
    for (const auto& e : m.entries) rows.push_back({e.poly.str(), e.equilibrium.str(), e.rate.str()});
    std::array<std::size_t, 3> width{0, 0, 0};
    for (const auto& r : rows)
        for (int c = 0; c < 3; ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream os;
    auto line = [&](const std::array<std::string, 3>& r) {
        os << std::left << std::setw(static_cast<int>(width[0])) << r[0] << " | "
           << std::setw(static_cast<int>(width[1])) << r[1] << " | " << r[2] << '\n';
    };
    line(rows[0]);
    os << std::string(width[0], '-') << "-+-" << std::string(width[1], '-') << "-+-" << std::string(width[2], '-')
       << '\n';
    for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
    return os.str();
}

}  // namespace lbmc::methods
