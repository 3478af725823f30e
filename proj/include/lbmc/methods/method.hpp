#pragma once

#include <map>
#include <string>
#include <vector>

#include "lbmc/equilibria/equilibrium.hpp"
#include "lbmc/lattice/stencil.hpp"
#include "lbmc/moments/poly.hpp"
#include "lbmc/sym/ops.hpp"

namespace lbmc::methods {

using sym::Assignment;
using sym::Expr;
using moments::MomentPoly;

enum class Space { Moment, Cumulant };

struct RelaxationInfo {
    MomentPoly poly;
    Expr equilibrium;
    Expr rate;
};

struct MethodSpec {
    lattice::Stencil stencil;
    Space space = Space::Moment;
    std::vector<RelaxationInfo> entries;
    equilibria::EquilibriumSpec eq;
    /// Per-cell definitions of derived rate symbols (turbulence or entropic
    /// models), evaluated after density and velocity.
    std::vector<Assignment> rate_definitions;
};

/// The simplification unit: subexpressions followed by q outputs.
struct CollisionRule {
    lattice::Stencil stencil;
    std::vector<Assignment> subexpressions;
    std::vector<Assignment> outputs;
    std::vector<Expr> pre;        // f_q
    std::vector<Expr> post;       // fpost_q
    Expr density;
    std::vector<Expr> velocity;
    std::vector<Expr> rates;      // relaxation-rate symbols, derived ones included
    bool compressible = true;

    std::vector<Expr> inlined() const { return sym::inline_all(subexpressions, outputs); }
    /// Post-collision values: subexpressions in order, then the outputs.
    /// `inputs` binds f_q and every free parameter.
    std::vector<double> evaluate(const sym::Bindings& inputs) const;
    sym::FlopCount flops() const;
};

MethodSpec create_srt(const lattice::Stencil& s, const Expr& omega, const equilibria::EquilibriumSpec& eq = {});
MethodSpec create_trt(const lattice::Stencil& s, const Expr& omega_even, const Expr& omega_odd,
                      const equilibria::EquilibriumSpec& eq = {});

/// Rate groups: "shear", "bulk", and one entry per higher order ("3", "4", ...).
using RateMap = std::map<std::string, Expr>;

MethodSpec create_mrt(const lattice::Stencil& s, const RateMap& rates, bool weighted,
                      const equilibria::EquilibriumSpec& eq = {});
MethodSpec create_cumulant(const lattice::Stencil& s, const RateMap& rates,
                           const equilibria::EquilibriumSpec& eq = {});

bool is_even_moment(const MomentPoly& p);
bool is_shear_moment(const MomentPoly& p, int d);
bool is_bulk_moment(const MomentPoly& p, int d);
/// "conserved", "shear", "bulk" or the order as text.
std::string moment_group(const MomentPoly& p, int d);

CollisionRule assemble_collision_rule(const MethodSpec& m);

/// Mass and momentum defects of a moment-space rule, expanded after
/// eliminating d+1 populations through the definitions of rho and u. All
/// entries are zero for a conserving rule.
std::vector<Expr> conservation_defects(const CollisionRule& rule);

/// Second-order non-equilibrium moment sum_q c_qi c_qj (f_q - feq_q).
Expr nonequilibrium_stress(const MethodSpec& m, int i, int j);

/// Effective relaxation rate of the Smagorinsky model, solved in closed form
/// from the coupled rate/strain equations.
Expr smagorinsky_rate(const Expr& nu0, const Expr& c_s, const MethodSpec& m);
/// ω (6 C_S² |S| + 6 ν₀ + 1) − 2 with |S| taken from the strain relation,
/// which must canonicalize to zero for the rate returned above.
Expr smagorinsky_residual(const Expr& omega, const Expr& nu0, const Expr& c_s, const MethodSpec& m);

/// ν = cs2 (1/ω − 1/2) and its inverse.
Expr viscosity_from_rate(const Expr& omega, const sym::Rational& cs2 = {1, 3});
Expr rate_from_viscosity(const Expr& nu, const sym::Rational& cs2 = {1, 3});

/// Three-column text table: Moment | Equilibrium | Relaxation rate.
std::string tableau(const MethodSpec& m);

}  // namespace lbmc::methods
