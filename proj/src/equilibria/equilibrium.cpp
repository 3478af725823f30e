#include "lbmc/equilibria/equilibrium.hpp"

#include "lbmc/sym/ops.hpp"

namespace lbmc::equilibria {

using sym::Rational;

Expr rho() { return sym::sym("rho"); }
Expr velocity(int i) { return sym::sym("u_" + std::to_string(i)); }

std::vector<Expr> velocities(int d) {
    std::vector<Expr> u;
    for (int i = 0; i < d; ++i) u.push_back(velocity(i));
    return u;
}

std::vector<Expr> pdfs(int q) {
    std::vector<Expr> f;
    for (int i = 0; i < q; ++i) f.push_back(sym::sym("f_" + std::to_string(i)));
    return f;
}

std::vector<Expr> post_pdfs(int q) {
    std::vector<Expr> f;
    for (int i = 0; i < q; ++i) f.push_back(sym::sym("fpost_" + std::to_string(i)));
    return f;
}

Expr gaussian_raw_moment(const moments::Exponents& e, const EquilibriumSpec& spec) {
    Expr result = rho();
    for (int axis = 0; axis < 3; ++axis) {
        if (e[axis] == 0) continue;
        Expr u = velocity(axis);
        // M_n = u M_{n-1} + (n-1) cs2 M_{n-2}
        Expr m_prev(1), m = u;
        for (int n = 2; n <= e[axis]; ++n) {
            Expr next = sym::expand(u * m + Expr(Rational(n - 1) * spec.cs2) * m_prev);
            m_prev = m;
            m = next;
        }
        result = result * m;
    }
    return sym::expand(result);
}

int velocity_degree(const Expr& monomial, int d) {
    int deg = 0;
    auto add = [&](const Expr& f, int k) {
        for (int i = 0; i < d; ++i)
            if (f == velocity(i)) deg += k;
    };
    if (monomial.is_product()) {
        for (const auto& f : monomial.args()) {
            if (f.is_power())
                add(f.base(), f.exponent());
            else
                add(f, 1);
        }
    } else if (monomial.is_power()) {
        add(monomial.base(), monomial.exponent());
    } else {
        add(monomial, 1);
    }
    return deg;
}

Expr truncate_velocity_order(const Expr& e, int d, int order) {
    Expr x = sym::expand(e);
    std::vector<Expr> keep;
    for (const auto& t : x.is_sum() ? x.args() : std::vector<Expr>{x})
        if (velocity_degree(t, d) <= order) keep.push_back(t);
    return sym::sum(std::move(keep));
}

Expr make_incompressible(const Expr& e, int d) {
    Expr x = sym::expand(e);
    std::vector<Expr> out;
    for (const auto& t : x.is_sum() ? x.args() : std::vector<Expr>{x}) {
        if (velocity_degree(t, d) >= 1)
            out.push_back(sym::substitute(t, {{rho(), Expr(1)}}));
        else
            out.push_back(t);
    }
    return sym::sum(std::move(out));
}

Expr continuous_equilibrium_moment(const moments::MomentPoly& p, int d, const EquilibriumSpec& spec) {
    std::vector<Expr> ts;
    for (const auto& [e, c] : p.terms()) ts.push_back(Expr(c) * gaussian_raw_moment(e, spec));
    Expr m = truncate_velocity_order(sym::sum(std::move(ts)), d, spec.order);
    if (!spec.compressible) m = make_incompressible(m, d);
    return m;
}

std::vector<Expr> continuous_equilibrium_moments(const std::vector<moments::MomentPoly>& polys, int d,
                                                 const EquilibriumSpec& spec) {
    std::vector<Expr> out;
    for (const auto& p : polys) out.push_back(continuous_equilibrium_moment(p, d, spec));
    return out;
}

std::vector<Expr> discrete_equilibrium(const lattice::Stencil& s, const EquilibriumSpec& spec) {
    if (spec.order < 1 || spec.order > 3) throw ConfigError("equilibrium order must be 1, 2 or 3");
    Expr cs2(spec.cs2);
    Expr rho0 = spec.compressible ? rho() : Expr(1);
    auto u = velocities(s.d);
    Expr usq(0);
    for (const auto& ui : u) usq += ui * ui;
    std::vector<Expr> feq;
    for (int q = 0; q < s.q; ++q) {
        Expr cu(0);
        for (int i = 0; i < s.d; ++i) cu += Expr(s.c[q][i]) * u[i];
        Expr bracket = cu / cs2;
        if (spec.order >= 2) bracket += (cu * cu - cs2 * usq) / (2 * cs2 * cs2);
        // Third-order Hermite term u_a u_b u_g (c_a c_b c_g - cs2 (c_a d_bg + c_b d_ag + c_g d_ab)) / (6 cs2^3).
        if (spec.order >= 3) bracket += (cu * cu * cu - 3 * cs2 * cu * usq) / (6 * cs2 * cs2 * cs2);
        feq.push_back(sym::expand(Expr(s.w[q]) * rho() + Expr(s.w[q]) * rho0 * bracket));
    }
    return feq;
}

Macroscopic macroscopic_values(const lattice::Stencil& s, const EquilibriumSpec& spec) {
    auto f = pdfs(s.q);
    Macroscopic m;
    m.rho = sym::sum(f);
    for (int i = 0; i < s.d; ++i) {
        std::vector<Expr> ts;
        for (int q = 0; q < s.q; ++q)
            if (s.c[q][i] != 0) ts.push_back(Expr(s.c[q][i]) * f[q]);
        Expr mom = sym::sum(std::move(ts));
        m.u.push_back(spec.compressible ? mom / rho() : mom);
    }
    return m;
}

}  // namespace lbmc::equilibria
