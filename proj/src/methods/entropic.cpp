#include "lbmc/methods/entropic.hpp"

#include <cmath>
#include <sstream>

#include "lbmc/error.hpp"

namespace lbmc::methods {

KbcPartition example_kbc_partition() { return {{"shear"}, {"bulk", "3", "4", "5", "6"}}; }

Expr kbc_omega_h_symbol() { return sym::sym("omega_h"); }

MethodSpec apply_kbc_partition(const MethodSpec& m, const KbcPartition& p, const Expr& omega_s, const Expr& omega_h) {
    MethodSpec out = m;
    out.rate_definitions.clear();
    for (auto& e : out.entries) {
        std::string g = moment_group(e.poly, m.stencil.d);
        if (g == "conserved") {
            e.rate = Expr(0);
        } else if (p.shear.count(g)) {
            e.rate = omega_s;
        } else if (p.higher.count(g)) {
            e.rate = omega_h;
        } else {
            throw ConfigError("KBC partition does not cover moment " + e.poly.str() + " (group " + g + ")");
        }
    }
    return out;
}

std::vector<Expr> method_equilibrium(const MethodSpec& m) {
    if (m.space == Space::Cumulant) return equilibria::discrete_equilibrium(m.stencil, m.eq);
    std::vector<MomentPoly> polys;
    for (const auto& e : m.entries) polys.push_back(e.poly);
    auto basis = moments::build_basis(polys, m.stencil);
    std::vector<Expr> feq;
    for (int q = 0; q < m.stencil.q; ++q) {
        std::vector<Expr> ts;
        for (int k = 0; k < m.stencil.q; ++k)
            if (!basis.M_inv(q, k).is_zero())
                ts.push_back(Expr(basis.M_inv(q, k)) * m.entries[static_cast<std::size_t>(k)].equilibrium);
        feq.push_back(sym::expand(sym::sum(std::move(ts))));
    }
    return feq;
}

Expr kbc_higher_rate(const MethodSpec& m, const KbcPartition& p, const Expr& omega_s) {
    if (m.space != Space::Moment) throw ConfigError("the closed-form KBC rate needs a moment-space method; use the Newton path");
    Expr wh = kbc_omega_h_symbol();
    MethodSpec two = apply_kbc_partition(m, p, omega_s, wh);
    CollisionRule rule = assemble_collision_rule(two);
    auto feq = method_equilibrium(two);

    std::vector<Expr> ds, dh;
    for (const auto& o : rule.outputs) {
        Expr e = sym::expand(o.value);
        Expr a = sym::differentiate(e, omega_s);
        Expr b = sym::differentiate(e, wh);
        if (sym::contains(a, omega_s) || sym::contains(a, wh) || sym::contains(b, omega_s) || sym::contains(b, wh))
            throw ConfigError("collision rule is not linear in the two rates; use newton_entropy_maximize");
        ds.push_back(-a);
        dh.push_back(-b);
    }
    std::vector<Expr> num, den;
    for (std::size_t q = 0; q < feq.size(); ++q) {
        num.push_back(ds[q] * dh[q] / feq[q]);
        den.push_back(dh[q] * dh[q] / feq[q]);
    }
    return 1 + (1 - omega_s) * sym::sum(std::move(num)) / sym::sum(std::move(den));
}

MethodSpec create_kbc(const lattice::Stencil& s, const Expr& omega_s, const KbcPartition& p,
                      const equilibria::EquilibriumSpec& eq) {
    MethodSpec base;
    base.stencil = s;
    base.eq = eq;
    for (const auto& poly : moments::split_shear_bulk(moments::default_monomial_basis(s), s.d))
        base.entries.push_back({poly, equilibria::continuous_equilibrium_moment(poly, s.d, eq), Expr(0)});
    Expr wh = kbc_omega_h_symbol();
    MethodSpec out = apply_kbc_partition(base, p, omega_s, wh);
    out.rate_definitions.push_back({wh, kbc_higher_rate(base, p, omega_s)});
    return out;
}

EntropicProblem::EntropicProblem(const MethodSpec& m, const Expr& omega_s, const Expr& omega_h)
    : q_(m.stencil.q), omega_s_(omega_s.name()), omega_h_(omega_h.name()) {
    MethodSpec plain = m;
    plain.rate_definitions.clear();
    CollisionRule rule = assemble_collision_rule(plain);
    sym::ExprMap<Expr> inl;
    for (const auto& a : rule.subexpressions) {
        Expr v = sym::substitute(a.value, inl);
        if (sym::contains(v, omega_s) || sym::contains(v, omega_h))
            inl[a.target] = v;
        else
            pre_.push_back({a.target, v});
    }
    for (const auto& o : rule.outputs) {
        Expr v = sym::substitute(o.value, inl);
        out_.push_back(v);
        Expr d = sym::differentiate(v, omega_h);
        d1_.push_back(d);
        d2_.push_back(sym::differentiate(d, omega_h));
    }
    feq_ = method_equilibrium(m);
    for (const auto& f : rule.pre) f_names_.push_back(f.name());
}

sym::Bindings EntropicProblem::bind(const std::vector<double>& f, double omega_s, double omega_h) const {
    sym::Bindings b;
    for (int i = 0; i < q_; ++i) b[f_names_[static_cast<std::size_t>(i)]] = f[static_cast<std::size_t>(i)];
    b[omega_s_] = omega_s;
    b[omega_h_] = omega_h;
    for (const auto& a : pre_) b[a.target.name()] = sym::eval_f64(a.value, b);
    return b;
}

void EntropicProblem::evaluate(const std::vector<double>& f, double omega_s, double omega_h, std::vector<double>& fp,
                               std::vector<double>& d1, std::vector<double>& d2, std::vector<double>& feq) const {
    sym::Bindings b = bind(f, omega_s, omega_h);
    fp.resize(static_cast<std::size_t>(q_));
    d1.resize(fp.size());
    d2.resize(fp.size());
    feq.resize(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) {
        fp[i] = sym::eval_f64(out_[i], b);
        d1[i] = sym::eval_f64(d1_[i], b);
        d2[i] = sym::eval_f64(d2_[i], b);
        feq[i] = sym::eval_f64(feq_[i], b);
    }
}

double EntropicProblem::entropy(const std::vector<double>& f, double omega_s, double omega_h) const {
    std::vector<double> fp, d1, d2, feq;
    evaluate(f, omega_s, omega_h, fp, d1, d2, feq);
    double s = 0.0;
    for (std::size_t i = 0; i < fp.size(); ++i) {
        if (fp[i] <= 0.0 || feq[i] <= 0.0) throw DomainError("non-positive population in entropy evaluation");
        // -f' ln(f'/feq) plus (f' - feq), which sums to zero under mass
        // conservation, keeps the small terms free of cancellation.
        double delta = (fp[i] - feq[i]) / feq[i];
        s -= feq[i] * ((1.0 + delta) * std::log1p(delta) - delta);
    }
    return s;
}

double newton_entropy_maximize(const EntropicProblem& p, const std::vector<double>& f, double omega_s) {
    double w = 1.0;
    std::vector<double> fp, d1, d2, feq;
    double residual = 0.0;
    for (int it = 0; it < 50; ++it) {
        p.evaluate(f, omega_s, w, fp, d1, d2, feq);
        // S = -sum f' ln(f'/feq); g = dS/dw, h = d2S/dw2. The mass-conserving
        // update gives sum f'_w = 0, so the constant part of the log
        // derivative is dropped instead of summing rounding noise.
        double g = 0.0, h = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < fp.size(); ++i) {
            if (fp[i] <= 0.0 || feq[i] <= 0.0)
                throw DomainError("negative post-collision population during entropy maximization");
            double l = std::log(fp[i] / feq[i]);
            g -= d1[i] * l;
            scale += std::abs(d1[i]);
            h -= d2[i] * l + d1[i] * d1[i] / fp[i];
        }
        residual = g;
        // Below this the gradient is rounding noise and steps stop shrinking.
        if (std::abs(g) <= 1e-15 * scale) return w;
        if (h == 0.0) throw RuntimeFailure("entropy maximization: vanishing second derivative");
        double step = g / h;
        w -= step;
        if (std::abs(step) < 1e-12) return w;
    }
    std::ostringstream os;
    os << "entropy maximization did not converge (residual " << residual << ")";
    throw RuntimeFailure(os.str());
}

}  // namespace lbmc::methods
