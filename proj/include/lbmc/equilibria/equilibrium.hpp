#pragma once

#include <vector>

#include "lbmc/moments/poly.hpp"
#include "lbmc/sym/expr.hpp"

namespace lbmc::equilibria {

using sym::Expr;

struct EquilibriumSpec {
    bool compressible = true;
    int order = 2;  // maximal total degree in u, 1..3
    sym::Rational cs2{1, 3};
};

/// Symbols shared by every derivation.
Expr rho();
Expr velocity(int i);
std::vector<Expr> velocities(int d);
std::vector<Expr> pdfs(int q);       // f_0 .. f_{q-1}
std::vector<Expr> post_pdfs(int q);  // fpost_0 ..

/// Raw moment of the continuous Maxwellian with mean u and variance cs2.
Expr gaussian_raw_moment(const moments::Exponents& e, const EquilibriumSpec& spec);

/// Equilibrium value of every basis polynomial, truncated to spec.order in u.
std::vector<Expr> continuous_equilibrium_moments(const std::vector<moments::MomentPoly>& polys, int d,
                                                 const EquilibriumSpec& spec);
Expr continuous_equilibrium_moment(const moments::MomentPoly& p, int d, const EquilibriumSpec& spec);

/// Hermite-expanded discrete equilibrium up to spec.order.
std::vector<Expr> discrete_equilibrium(const lattice::Stencil& s, const EquilibriumSpec& spec);

struct Macroscopic {
    Expr rho;
    std::vector<Expr> u;
};

/// Density and velocity as functions of the populations f_q.
Macroscopic macroscopic_values(const lattice::Stencil& s, const EquilibriumSpec& spec);

/// Drops monomials whose degree in the velocity symbols exceeds `order`.
Expr truncate_velocity_order(const Expr& e, int d, int order);

/// Sets rho to 1 in every monomial that contains a velocity component.
Expr make_incompressible(const Expr& e, int d);

int velocity_degree(const Expr& monomial, int d);

}  // namespace lbmc::equilibria
