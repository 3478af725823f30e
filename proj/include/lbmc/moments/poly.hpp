#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "lbmc/lattice/stencil.hpp"
#include "lbmc/sym/expr.hpp"

namespace lbmc::moments {

using sym::Rational;
using Exponents = std::array<int, 3>;

/// Polynomial in the lattice velocity components, written in x, y, z.
class MomentPoly {
public:
    MomentPoly() = default;
    static MomentPoly monomial(Exponents e, Rational c = Rational(1));
    static MomentPoly constant(Rational c) { return monomial({0, 0, 0}, c); }

    const std::map<Exponents, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    int order() const;
    bool is_monomial() const { return terms_.size() == 1; }

    Rational eval(const lattice::Vec& c) const;

    MomentPoly operator+(const MomentPoly& o) const;
    MomentPoly operator-(const MomentPoly& o) const;
    MomentPoly operator*(const Rational& k) const;
    MomentPoly operator*(const MomentPoly& o) const;
    bool operator==(const MomentPoly& o) const { return terms_ == o.terms_; }
    bool operator<(const MomentPoly& o) const { return terms_ < o.terms_; }

    /// Text such as "3 x^2 + 3 y^2 - 2" (highest degree first).
    std::string str() const;

    /// The same polynomial as an Expr in the given symbols.
    sym::Expr to_expr(const std::vector<sym::Expr>& vars) const;

private:
    std::map<Exponents, Rational> terms_;
    void add(const Exponents& e, const Rational& c);
};

MomentPoly x_pow(int a, int b = 0, int c = 0);

/// Ordering used for monomial lists: total degree, then monomials with a
/// higher single exponent first, then exponent tuples descending.
bool monomial_less(const Exponents& a, const Exponents& b);

/// Exponents folded onto {0, 1, 2}, which leaves values on {-1, 0, 1} unchanged.
MomentPoly reduce_aliasing(const MomentPoly& p);

sym::Expr discrete_moment(const MomentPoly& p, const lattice::Stencil& s, const std::vector<sym::Expr>& values);

std::vector<MomentPoly> default_monomial_basis(const lattice::Stencil& s);

/// Replaces the pure squares by the bulk sum and shear differences.
std::vector<MomentPoly> split_shear_bulk(const std::vector<MomentPoly>& polys, int dim);

std::vector<MomentPoly> gram_schmidt(const std::vector<MomentPoly>& polys, const lattice::Stencil& s, bool weighted);

/// Dense exact rational matrix.
class RMatrix {
public:
    RMatrix() = default;
    RMatrix(int rows, int cols) : r_(rows), c_(cols), a_(static_cast<std::size_t>(rows * cols)) {}
    static RMatrix identity(int n);

    int rows() const { return r_; }
    int cols() const { return c_; }
    Rational& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * c_ + j)]; }
    const Rational& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * c_ + j)]; }
    RMatrix operator*(const RMatrix& o) const;
    bool operator==(const RMatrix& o) const = default;

    int rank() const;
    /// Throws SingularError naming a dependent row if not invertible.
    RMatrix inverse() const;

private:
    int r_ = 0, c_ = 0;
    std::vector<Rational> a_;
};

RMatrix moment_matrix(const std::vector<MomentPoly>& polys, const lattice::Stencil& s);

struct MomentBasis {
    lattice::Stencil stencil;
    std::vector<MomentPoly> polys;
    RMatrix M;
    RMatrix M_inv;
};

MomentBasis build_basis(const std::vector<MomentPoly>& polys, const lattice::Stencil& s);

/// True if the two lists span the same space of functions on the stencil.
bool same_span(const std::vector<MomentPoly>& a, const std::vector<MomentPoly>& b, const lattice::Stencil& s);

}  // namespace lbmc::moments
