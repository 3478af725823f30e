#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>

#include "lbmc/error.hpp"

namespace lbmc::sym {

/// Exact rational number in lowest terms with a positive denominator.
///
/// Backed by 64-bit integers; every operation is evaluated in 128-bit
/// arithmetic and throws DomainError if the reduced result does not fit.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT: implicit by intent
    Rational(std::int64_t n, std::int64_t d) { *this = make(n, d); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_one() const { return num_ == 1 && den_ == 1; }
    bool is_minus_one() const { return num_ == -1 && den_ == 1; }
    bool is_integer() const { return den_ == 1; }
    bool is_negative() const { return num_ < 0; }
    int sign() const { return (num_ > 0) - (num_ < 0); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational operator-() const {
        if (num_ == INT64_MIN) throw DomainError("rational overflow in negation");
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }
    Rational abs() const { return num_ < 0 ? -*this : *this; }
    Rational reciprocal() const {
        if (num_ == 0) throw DomainError("division by zero");
        return make(den_, num_);
    }
    /// Integer power; negative exponents take the reciprocal.
    Rational pow(int e) const;

    friend Rational operator+(const Rational& a, const Rational& b) {
        __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
        __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return reduce(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        std::int64_t g1 = std::gcd(a.num_, b.den_);
        std::int64_t g2 = std::gcd(b.num_, a.den_);
        if (g1 == 0) g1 = 1;
        if (g2 == 0) g2 = 1;
        __int128 n = static_cast<__int128>(a.num_ / g1) * (b.num_ / g2);
        __int128 d = static_cast<__int128>(a.den_ / g2) * (b.den_ / g1);
        return reduce(n, d);
    }
    friend Rational operator/(const Rational& a, const Rational& b) { return a * b.reciprocal(); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        __int128 l = static_cast<__int128>(a.num_) * b.den_;
        __int128 r = static_cast<__int128>(b.num_) * a.den_;
        return l <=> r;
    }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    std::size_t hash() const {
        return std::hash<std::int64_t>{}(num_) * 1000003u ^ std::hash<std::int64_t>{}(den_);
    }

private:
    static Rational make(std::int64_t n, std::int64_t d) {
        if (d == 0) throw DomainError("rational with zero denominator");
        return reduce(n, d);
    }
    static Rational reduce(__int128 n, __int128 d);

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

inline Rational Rational::reduce(__int128 n, __int128 d) {
    if (d < 0) {
        n = -n;
        d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        n /= a;
        d /= a;
    }
    if (n > INT64_MAX || n < -INT64_MAX || d > INT64_MAX) throw DomainError("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
}

inline Rational Rational::pow(int e) const {
    Rational base = e < 0 ? reciprocal() : *this;
    unsigned k = e < 0 ? static_cast<unsigned>(-e) : static_cast<unsigned>(e);
    Rational result{1};
    while (k) {
        if (k & 1u) result *= base;
        k >>= 1u;
        if (k) base *= base;
    }
    return result;
}

}  // namespace lbmc::sym
