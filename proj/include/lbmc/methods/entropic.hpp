#pragma once

#include <set>
#include <string>
#include <vector>

#include "lbmc/methods/method.hpp"

namespace lbmc::methods {

/// Moment groups (as named by moment_group) relaxed with the shear rate and
/// with the entropically chosen higher-order rate.
struct KbcPartition {
    std::set<std::string> shear;
    std::set<std::string> higher;
};

/// Shear moments with ω_s; bulk and every order above two with ω_h.
KbcPartition example_kbc_partition();

/// Copy of `m` whose rates follow the partition: ω_s, ω_h, 0 for conserved
/// entries. Throws if a non-conserved entry is in neither set.
MethodSpec apply_kbc_partition(const MethodSpec& m, const KbcPartition& p, const Expr& omega_s, const Expr& omega_h);

Expr kbc_omega_h_symbol();

/// Linearized entropy-maximizing ω_h in terms of f, rho, u and ω_s.
Expr kbc_higher_rate(const MethodSpec& m, const KbcPartition& p, const Expr& omega_s);

/// Moment-space KBC method on the shear/bulk split monomial basis with ω_h
/// defined per cell by kbc_higher_rate.
MethodSpec create_kbc(const lattice::Stencil& s, const Expr& omega_s, const KbcPartition& p = example_kbc_partition(),
                      const equilibria::EquilibriumSpec& eq = {});

/// Discrete equilibrium consistent with the method's moment equilibria.
std::vector<Expr> method_equilibrium(const MethodSpec& m);

/// A collision rule with ω_h left free, prepared for per-cell evaluation of
/// the post-collision state and its first two ω_h derivatives.
class EntropicProblem {
public:
    EntropicProblem(const MethodSpec& m, const Expr& omega_s, const Expr& omega_h);

    int q() const { return q_; }
    /// Post-collision values and derivatives for populations f.
    void evaluate(const std::vector<double>& f, double omega_s, double omega_h, std::vector<double>& fp,
                  std::vector<double>& d1, std::vector<double>& d2, std::vector<double>& feq) const;
    /// -sum f' ln(f'/feq), evaluated in a form that stays accurate near
    /// equilibrium.
    double entropy(const std::vector<double>& f, double omega_s, double omega_h) const;

private:
    int q_;
    std::string omega_s_, omega_h_;
    std::vector<Assignment> pre_;   // rate-independent subexpressions
    std::vector<Expr> out_, d1_, d2_, feq_;
    std::vector<std::string> f_names_;

    sym::Bindings bind(const std::vector<double>& f, double omega_s, double omega_h) const;
};

/// Newton iteration on dS/dω_h = 0 starting from ω_h = 1.
double newton_entropy_maximize(const EntropicProblem& p, const std::vector<double>& f, double omega_s);

}  // namespace lbmc::methods
