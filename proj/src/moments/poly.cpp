#include "lbmc/moments/poly.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace lbmc::moments {

namespace {

int degree(const Exponents& e) { return e[0] + e[1] + e[2]; }

std::vector<std::pair<Exponents, Rational>> display_order(const std::map<Exponents, Rational>& t) {
    std::vector<std::pair<Exponents, Rational>> v(t.begin(), t.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        if (degree(a.first) != degree(b.first)) return degree(a.first) > degree(b.first);
        return a.first > b.first;
    });
    return v;
}

std::int64_t lcm(std::int64_t a, std::int64_t b) { return a / std::gcd(a, b) * b; }

// Smallest integer multiple with a positive leading coefficient.
MomentPoly integer_normalize(const MomentPoly& p) {
    if (p.is_zero()) return p;
    std::int64_t l = 1, g = 0;
    for (const auto& [e, c] : p.terms()) l = lcm(l, c.den());
    for (const auto& [e, c] : p.terms()) g = std::gcd(g, (c * Rational(l)).num());
    Rational k(l, g);
    if (display_order(p.terms()).front().second.is_negative()) k = -k;
    return p * k;
}

}  // namespace

MomentPoly MomentPoly::monomial(Exponents e, Rational c) {
    MomentPoly p;
    p.add(e, c);
    return p;
}

MomentPoly x_pow(int a, int b, int c) { return MomentPoly::monomial({a, b, c}); }

void MomentPoly::add(const Exponents& e, const Rational& c) {
    if (c.is_zero()) return;
    auto it = terms_.find(e);
    if (it == terms_.end()) {
        terms_.emplace(e, c);
        return;
    }
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
}

int MomentPoly::order() const {
    int o = 0;
    for (const auto& [e, c] : terms_) o = std::max(o, degree(e));
    return o;
}

Rational MomentPoly::eval(const lattice::Vec& v) const {
    Rational r(0);
    for (const auto& [e, c] : terms_) {
        std::int64_t m = 1;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < e[i]; ++k) m *= v[i];
        r += c * Rational(m);
    }
    return r;
}

MomentPoly MomentPoly::operator+(const MomentPoly& o) const {
    MomentPoly r = *this;
    for (const auto& [e, c] : o.terms_) r.add(e, c);
    return r;
}

MomentPoly MomentPoly::operator-(const MomentPoly& o) const { return *this + o * Rational(-1); }

MomentPoly MomentPoly::operator*(const Rational& k) const {
    MomentPoly r;
    for (const auto& [e, c] : terms_) r.add(e, c * k);
    return r;
}

MomentPoly MomentPoly::operator*(const MomentPoly& o) const {
    MomentPoly r;
    for (const auto& [e1, c1] : terms_)
        for (const auto& [e2, c2] : o.terms_) r.add({e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]}, c1 * c2);
    return r;
}

std::string MomentPoly::str() const {
    if (terms_.empty()) return "0";
    static const char* names[] = {"x", "y", "z"};
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, c] : display_order(terms_)) {
        Rational a = c.abs();
        if (first) {
            if (c.is_negative()) os << "-";
        } else {
            os << (c.is_negative() ? " - " : " + ");
        }
        first = false;
        bool has_var = degree(e) > 0;
        if (!a.is_one() || !has_var) {
            os << a.str();
            if (has_var) os << " ";
        }
        bool first_var = true;
        for (int i = 0; i < 3; ++i) {
            if (e[i] == 0) continue;
            if (!first_var) os << " ";
            first_var = false;
            os << names[i];
            if (e[i] > 1) os << "^" << e[i];
        }
    }
    return os.str();
}

sym::Expr MomentPoly::to_expr(const std::vector<sym::Expr>& vars) const {
    std::vector<sym::Expr> ts;
    for (const auto& [e, c] : terms_) {
        std::vector<sym::Expr> fs{sym::Expr(c)};
        for (std::size_t i = 0; i < vars.size() && i < 3; ++i) fs.push_back(sym::pow(vars[i], e[i]));
        ts.push_back(sym::product(std::move(fs)));
    }
    return sym::sum(std::move(ts));
}

bool monomial_less(const Exponents& a, const Exponents& b) {
    if (degree(a) != degree(b)) return degree(a) < degree(b);
    int ma = *std::max_element(a.begin(), a.end()), mb = *std::max_element(b.begin(), b.end());
    if (ma != mb) return ma > mb;
    return a > b;
}

MomentPoly reduce_aliasing(const MomentPoly& p) {
    MomentPoly r;
    for (const auto& [e, c] : p.terms()) {
        Exponents f{};
        for (int i = 0; i < 3; ++i) f[i] = e[i] == 0 ? 0 : (e[i] % 2 == 1 ? 1 : 2);
        r = r + MomentPoly::monomial(f, c);
    }
    return r;
}

sym::Expr discrete_moment(const MomentPoly& p, const lattice::Stencil& s, const std::vector<sym::Expr>& values) {
    if (static_cast<int>(values.size()) != s.q)
        throw ConfigError("discrete_moment: expected " + std::to_string(s.q) + " values, got " +
                          std::to_string(values.size()));
    std::vector<sym::Expr> ts;
    for (int q = 0; q < s.q; ++q) {
        Rational k = p.eval(s.c[q]);
        if (!k.is_zero()) ts.push_back(sym::Expr(k) * values[q]);
    }
    return sym::sum(std::move(ts));
}

std::vector<MomentPoly> default_monomial_basis(const lattice::Stencil& s) {
    std::vector<Exponents> cands;
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 2; ++b)
            for (int c = 0; c <= (s.d == 3 ? 2 : 0); ++c) cands.push_back({a, b, c});
    std::sort(cands.begin(), cands.end(), monomial_less);

    // Group candidates by their row on the stencil; zero rows are dropped.
    std::vector<std::vector<Rational>> rows;
    std::vector<std::vector<Exponents>> groups;
    for (const auto& e : cands) {
        std::vector<Rational> row;
        bool nonzero = false;
        for (int q = 0; q < s.q; ++q) {
            row.push_back(MomentPoly::monomial(e).eval(s.c[q]));
            nonzero = nonzero || !row.back().is_zero();
        }
        if (!nonzero) continue;
        auto it = std::find(rows.begin(), rows.end(), row);
        if (it == rows.end()) {
            rows.push_back(row);
            groups.push_back({e});
        } else {
            groups[static_cast<std::size_t>(it - rows.begin())].push_back(e);
        }
    }
    std::vector<MomentPoly> out;
    for (const auto& g : groups) {
        int lowest = degree(g.front());
        for (const auto& e : g) lowest = std::min(lowest, degree(e));
        MomentPoly p;
        for (const auto& e : g)
            if (degree(e) == lowest) p = p + MomentPoly::monomial(e);
        out.push_back(p);
    }
    if (static_cast<int>(out.size()) != s.q || moment_matrix(out, s).rank() != s.q)
        throw SingularError("default moment basis for " + s.name + " is not of full rank");
    return out;
}

std::vector<MomentPoly> split_shear_bulk(const std::vector<MomentPoly>& polys, int dim) {
    std::vector<MomentPoly> squares;
    for (int i = 0; i < dim; ++i) {
        Exponents e{0, 0, 0};
        e[i] = 2;
        squares.push_back(MomentPoly::monomial(e));
    }
    std::vector<int> pos;
    for (const auto& sq : squares) {
        auto it = std::find(polys.begin(), polys.end(), sq);
        if (it == polys.end()) throw ConfigError("split_shear_bulk: moment " + sq.str() + " not in list");
        pos.push_back(static_cast<int>(it - polys.begin()));
    }
    MomentPoly bulk;
    for (const auto& sq : squares) bulk = bulk + sq;

    std::vector<MomentPoly> out;
    int last_second = -1;
    for (std::size_t i = 0; i < polys.size(); ++i)
        if (polys[i].order() == 2) last_second = static_cast<int>(i);
    for (std::size_t i = 0; i < polys.size(); ++i) {
        auto k = std::find(pos.begin(), pos.end(), static_cast<int>(i));
        if (k != pos.end()) {
            auto j = static_cast<std::size_t>(k - pos.begin());
            if (j + 1 < squares.size()) out.push_back(squares[j] - squares[j + 1]);
        } else {
            out.push_back(polys[i]);
        }
        if (static_cast<int>(i) == last_second) out.push_back(bulk);
    }
    return out;
}

std::vector<MomentPoly> gram_schmidt(const std::vector<MomentPoly>& polys, const lattice::Stencil& s, bool weighted) {
    if (moment_matrix(polys, s).rank() != static_cast<int>(polys.size()))
        throw SingularError("gram_schmidt: input moments are linearly dependent on " + s.name);
    std::vector<MomentPoly> in = polys;
    std::stable_sort(in.begin(), in.end(), [](const MomentPoly& a, const MomentPoly& b) { return a.order() < b.order(); });
    auto dot = [&](const MomentPoly& a, const MomentPoly& b) {
        Rational r(0);
        for (int q = 0; q < s.q; ++q) {
            Rational t = a.eval(s.c[q]) * b.eval(s.c[q]);
            r += weighted ? t * s.w[q] : t;
        }
        return r;
    };
    std::vector<MomentPoly> out;
    std::vector<Rational> norms;
    for (const auto& p : in) {
        MomentPoly v = p;
        for (std::size_t j = 0; j < out.size(); ++j) v = v - out[j] * (dot(p, out[j]) / norms[j]);
        v = integer_normalize(reduce_aliasing(v));
        out.push_back(v);
        norms.push_back(dot(v, v));
    }
    return out;
}

RMatrix RMatrix::identity(int n) {
    RMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = Rational(1);
    return m;
}

RMatrix RMatrix::operator*(const RMatrix& o) const {
    RMatrix r(r_, o.c_);
    for (int i = 0; i < r_; ++i)
        for (int k = 0; k < c_; ++k) {
            const Rational& a = (*this)(i, k);
            if (a.is_zero()) continue;
            for (int j = 0; j < o.c_; ++j) r(i, j) += a * o(k, j);
        }
    return r;
}

namespace {

// Row-by-row echelon reduction; returns the rank. When `first_dependent` is
// given it receives the first row that depends on the rows above it, or -1.
int eliminate(const RMatrix& a, int* first_dependent) {
    int rank = 0;
    if (first_dependent) *first_dependent = -1;
    std::vector<int> pivot_col;
    std::vector<std::vector<Rational>> kept;
    for (int i = 0; i < a.rows(); ++i) {
        std::vector<Rational> row(static_cast<std::size_t>(a.cols()));
        for (int j = 0; j < a.cols(); ++j) row[static_cast<std::size_t>(j)] = a(i, j);
        for (std::size_t k = 0; k < kept.size(); ++k) {
            auto pc = static_cast<std::size_t>(pivot_col[k]);
            if (row[pc].is_zero()) continue;
            Rational f = row[pc] / kept[k][pc];
            for (std::size_t j = 0; j < row.size(); ++j)
                if (!kept[k][j].is_zero()) row[j] -= f * kept[k][j];
        }
        int pc = -1;
        for (std::size_t j = 0; j < row.size(); ++j)
            if (!row[j].is_zero()) {
                pc = static_cast<int>(j);
                break;
            }
        if (pc < 0) {
            if (first_dependent && *first_dependent < 0) *first_dependent = i;
            continue;
        }
        kept.push_back(std::move(row));
        pivot_col.push_back(pc);
        ++rank;
    }
    return rank;
}

}  // namespace

int RMatrix::rank() const { return eliminate(*this, nullptr); }

RMatrix RMatrix::inverse() const {
    if (r_ != c_) throw SingularError("inverse of a non-square matrix");
    int dep = -1;
    if (eliminate(*this, &dep) != r_) throw SingularError("matrix is singular: row " + std::to_string(dep) + " depends on earlier rows");
    int n = r_;
    RMatrix a = *this, inv = identity(n);
    for (int col = 0; col < n; ++col) {
        int p = col;
        while (a(p, col).is_zero()) ++p;
        if (p != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a(p, j), a(col, j));
                std::swap(inv(p, j), inv(col, j));
            }
        Rational d = a(col, col);
        for (int j = 0; j < n; ++j) {
            a(col, j) /= d;
            inv(col, j) /= d;
        }
        for (int i = 0; i < n; ++i) {
            if (i == col || a(i, col).is_zero()) continue;
            Rational f = a(i, col);
            for (int j = 0; j < n; ++j) {
                if (!a(col, j).is_zero()) a(i, j) -= f * a(col, j);
                if (!inv(col, j).is_zero()) inv(i, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

RMatrix moment_matrix(const std::vector<MomentPoly>& polys, const lattice::Stencil& s) {
    RMatrix m(static_cast<int>(polys.size()), s.q);
    for (std::size_t k = 0; k < polys.size(); ++k)
        for (int q = 0; q < s.q; ++q) m(static_cast<int>(k), q) = polys[k].eval(s.c[q]);
    return m;
}

MomentBasis build_basis(const std::vector<MomentPoly>& polys, const lattice::Stencil& s) {
    if (static_cast<int>(polys.size()) != s.q)
        throw SingularError("basis needs " + std::to_string(s.q) + " moments, got " + std::to_string(polys.size()));
    MomentBasis b{s, polys, moment_matrix(polys, s), {}};
    try {
        b.M_inv = b.M.inverse();
    } catch (const SingularError&) {
        int dep = -1;
        eliminate(b.M, &dep);
        throw SingularError("moment basis is singular: moment '" + polys[static_cast<std::size_t>(dep)].str() +
                            "' (row " + std::to_string(dep) + ") depends on earlier rows");
    }
    return b;
}

bool same_span(const std::vector<MomentPoly>& a, const std::vector<MomentPoly>& b, const lattice::Stencil& s) {
    int ra = moment_matrix(a, s).rank(), rb = moment_matrix(b, s).rank();
    std::vector<MomentPoly> both = a;
    both.insert(both.end(), b.begin(), b.end());
    int rab = moment_matrix(both, s).rank();
    return ra == rb && rab == ra;
}

}  // namespace lbmc::moments
