#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "lbmc/methods/method.hpp"

namespace lbmc::methods {

using moments::Exponents;

namespace detail {

inline double log_of(double x) { return std::log(x); }
inline Expr log_of(const Expr& x) { return sym::log(x); }

inline long binomial(int n, int k) {
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Calls fn(k, C(n, k)) for every multi-index k <= n componentwise.
template <class Fn>
void for_each_below(const Exponents& n, Fn&& fn) {
    for (int a = 0; a <= n[0]; ++a)
        for (int b = 0; b <= n[1]; ++b)
            for (int c = 0; c <= n[2]; ++c)
                fn(Exponents{a, b, c}, binomial(n[0], a) * binomial(n[1], b) * binomial(n[2], c));
}

inline int first_nonzero(const Exponents& e) {
    for (int i = 0; i < 3; ++i)
        if (e[i] > 0) return i;
    return -1;
}

inline Exponents minus(const Exponents& a, const Exponents& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline bool moment_index_less(const Exponents& a, const Exponents& b) {
    int da = a[0] + a[1] + a[2], db = b[0] + b[1] + b[2];
    if (da != db) return da < db;
    return a < b;
}

}  // namespace detail

/// Cumulants from raw moments. The index set must be closed under taking
/// smaller multi-indices and contain the zero index; the zero cumulant is
/// the logarithm of the zero moment.
template <class T>
std::map<Exponents, T> raw_moments_to_cumulants(const std::map<Exponents, T>& m) {
    std::vector<Exponents> order;
    for (const auto& [e, v] : m) order.push_back(e);
    std::sort(order.begin(), order.end(), detail::moment_index_less);
    T m0 = m.at({0, 0, 0});
    std::map<Exponents, T> mt;
    for (const auto& [e, v] : m) mt[e] = v / m0;
    std::map<Exponents, T> k;
    for (const auto& e : order) {
        int i = detail::first_nonzero(e);
        if (i < 0) {
            k[e] = detail::log_of(m0);
            continue;
        }
        Exponents ei{0, 0, 0};
        ei[i] = 1;
        Exponents n = detail::minus(e, ei);
        T acc = mt.at(e);
        detail::for_each_below(n, [&](const Exponents& kk, long c) {
            if (kk == n) return;
            Exponents up = kk;
            up[i] += 1;
            acc = acc - T(c) * k.at(up) * mt.at(detail::minus(n, kk));
        });
        k[e] = acc;
    }
    return k;
}

/// Inverse of raw_moments_to_cumulants on the same index set.
template <class T>
std::map<Exponents, T> cumulants_to_raw_moments(const std::map<Exponents, T>& k, const T& m0) {
    std::vector<Exponents> order;
    for (const auto& [e, v] : k) order.push_back(e);
    std::sort(order.begin(), order.end(), detail::moment_index_less);
    std::map<Exponents, T> mt;
    for (const auto& e : order) {
        int i = detail::first_nonzero(e);
        if (i < 0) {
            mt[e] = T(1);
            continue;
        }
        Exponents ei{0, 0, 0};
        ei[i] = 1;
        Exponents n = detail::minus(e, ei);
        T acc = k.at(e);
        detail::for_each_below(n, [&](const Exponents& kk, long c) {
            if (kk == n) return;
            Exponents up = kk;
            up[i] += 1;
            acc = acc + T(c) * k.at(up) * mt.at(detail::minus(n, kk));
        });
        mt[e] = acc;
    }
    std::map<Exponents, T> m;
    for (const auto& [e, v] : mt) m[e] = v * m0;
    return m;
}

/// Equilibrium cumulant of a polynomial: mean u, variance cs2, nothing above.
Expr cumulant_equilibrium(const MomentPoly& p, int d, const equilibria::EquilibriumSpec& eq);

/// Monomials used by the polynomials of a cumulant method, in index order.
std::vector<Exponents> cumulant_indices(const MethodSpec& m);

/// Symbol name such as m_210 for a multi-index.
std::string index_name(const std::string& prefix, const Exponents& e, int d);

/// Writes the cumulant collision into `rule` (density and velocity already
/// present as subexpressions, `rates` aligned with the method entries).
void assemble_cumulant_outputs(const MethodSpec& m, const std::vector<Expr>& rates, CollisionRule& rule);

}  // namespace lbmc::methods
