#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lbmc/sym/rational.hpp"

namespace lbmc::sym {

enum class Kind : std::uint8_t { Rational, Symbol, Indexed, Power, Product, Sum, Sqrt, Log };

using Offset = std::array<int, 3>;

struct Node;

/// Immutable symbolic scalar expression.
///
/// Expressions are always held in canonical form: sums and products are
/// flattened, like terms/factors are merged, numeric parts are folded, and
/// children are sorted by a deterministic total order. Two expressions that
/// are equal up to commutativity/associativity therefore compare equal
/// structurally.
///
/// A product consisting of a rational coefficient and a single sum is
/// distributed (`2*(a+b)` becomes `2*a + 2*b`); any other product of a sum
/// is kept as is.
class Expr {
public:
    Expr();  // zero
    Expr(Rational r);          // NOLINT: implicit by intent
    Expr(std::int64_t v);      // NOLINT
    Expr(int v) : Expr(static_cast<std::int64_t>(v)) {}  // NOLINT

    static Expr symbol(std::string name);
    static Expr indexed(std::string tag, Offset offset, int index);

    Kind kind() const;
    bool is_rational() const { return kind() == Kind::Rational; }
    bool is_symbol() const { return kind() == Kind::Symbol; }
    bool is_indexed() const { return kind() == Kind::Indexed; }
    bool is_leaf() const { return is_symbol() || is_indexed(); }
    bool is_sum() const { return kind() == Kind::Sum; }
    bool is_product() const { return kind() == Kind::Product; }
    bool is_power() const { return kind() == Kind::Power; }
    bool is_zero() const;
    bool is_one() const;

    const Rational& value() const;           // Rational
    const std::string& name() const;         // Symbol name or Indexed tag
    const Offset& offset() const;            // Indexed
    int index() const;                       // Indexed
    int exponent() const;                    // Power
    const Expr& base() const;                // Power base, Sqrt/Log argument
    const std::vector<Expr>& args() const;   // Sum/Product children; unary arg otherwise

    std::size_t hash() const;
    std::string str() const;

    const Node* node() const { return node_.get(); }

    friend bool operator==(const Expr& a, const Expr& b);
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<const Node> node_;
};

struct Node {
    Kind kind;
    std::size_t hash = 0;
    Rational value;
    std::string name;
    Offset offset{0, 0, 0};
    int index = 0;
    int exponent = 0;
    std::vector<Expr> args;
};

/// Deterministic structural total order (negative, zero, positive).
int compare(const Expr& a, const Expr& b);

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};
struct ExprHash {
    std::size_t operator()(const Expr& e) const { return e.hash(); }
};

template <class V>
using ExprMap = std::unordered_map<Expr, V, ExprHash>;

Expr sum(std::vector<Expr> terms);
Expr product(std::vector<Expr> factors);
Expr pow(const Expr& base, int exponent);
Expr sqrt(const Expr& arg);
Expr log(const Expr& arg);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

inline Expr sym(std::string name) { return Expr::symbol(std::move(name)); }
inline Expr rat(std::int64_t n, std::int64_t d = 1) { return Expr(Rational(n, d)); }

/// Splits a term into its rational coefficient and the remaining factor
/// (`3*x*y` -> {3, x*y}, `5` -> {5, 1}).
std::pair<Rational, Expr> split_coefficient(const Expr& e);

/// Collects every Symbol and Indexed leaf reachable from e.
void collect_leaves(const Expr& e, std::vector<Expr>& out);
std::vector<Expr> free_symbols(const Expr& e);
bool contains(const Expr& e, const Expr& leaf);

std::ostream& operator<<(std::ostream& os, const Expr& e);

}  // namespace lbmc::sym
