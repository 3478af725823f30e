#include "lbmc/sym/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

namespace lbmc::sym {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::shared_ptr<Node> new_node(Kind k) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    return n;
}

Expr finish(std::shared_ptr<Node> n) {
    std::size_t h = static_cast<std::size_t>(n->kind) * 0x100000001b3ULL;
    switch (n->kind) {
        case Kind::Rational: h = mix(h, n->value.hash()); break;
        case Kind::Symbol: h = mix(h, std::hash<std::string>{}(n->name)); break;
        case Kind::Indexed:
            h = mix(h, std::hash<std::string>{}(n->name));
            for (int o : n->offset) h = mix(h, static_cast<std::size_t>(o + 7));
            h = mix(h, static_cast<std::size_t>(n->index));
            break;
        case Kind::Power: h = mix(h, static_cast<std::size_t>(n->exponent + 1000)); [[fallthrough]];
        default:
            for (const auto& a : n->args) h = mix(h, a.hash());
    }
    n->hash = h;
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

const Expr& zero_expr() {
    static const Expr z = [] {
        auto n = new_node(Kind::Rational);
        return finish(n);
    }();
    return z;
}

const Expr& one_expr() {
    static const Expr o = [] {
        auto n = new_node(Kind::Rational);
        n->value = Rational(1);
        return finish(n);
    }();
    return o;
}

// Natural order on identifiers so that f_2 sorts before f_10.
int compare_names(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
            std::size_t i2 = i, j2 = j;
            while (i2 < a.size() && std::isdigit(static_cast<unsigned char>(a[i2]))) ++i2;
            while (j2 < b.size() && std::isdigit(static_cast<unsigned char>(b[j2]))) ++j2;
            std::string na = a.substr(i, i2 - i), nb = b.substr(j, j2 - j);
            na.erase(0, std::min(na.find_first_not_of('0'), na.size() - 1));
            nb.erase(0, std::min(nb.find_first_not_of('0'), nb.size() - 1));
            if (na.size() != nb.size()) return na.size() < nb.size() ? -1 : 1;
            if (int c = na.compare(nb)) return c < 0 ? -1 : 1;
            i = i2;
            j = j2;
            continue;
        }
        if (a[i] != b[j]) return a[i] < b[j] ? -1 : 1;
        ++i;
        ++j;
    }
    if (i == a.size() && j == b.size()) return 0;
    return i == a.size() ? -1 : 1;
}

int kind_rank(Kind k) {
    switch (k) {
        case Kind::Rational: return 0;
        case Kind::Symbol: return 1;
        case Kind::Indexed: return 2;
        case Kind::Product: return 3;
        case Kind::Sum: return 4;
        case Kind::Sqrt: return 5;
        case Kind::Log: return 6;
        case Kind::Power: return 7;
    }
    return 8;
}

int compare_nonpower(const Expr& a, const Expr& b);

int compare_impl(const Expr& a, const Expr& b) {
    if (a.node() == b.node()) return 0;
    bool ra = a.is_rational(), rb = b.is_rational();
    if (ra || rb) {
        if (ra && rb) {
            auto c = a.value() <=> b.value();
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        return ra ? -1 : 1;
    }
    const Expr& ba = a.is_power() ? a.base() : a;
    const Expr& bb = b.is_power() ? b.base() : b;
    if (int c = compare_nonpower(ba, bb)) return c;
    int ea = a.is_power() ? a.exponent() : 1;
    int eb = b.is_power() ? b.exponent() : 1;
    return (ea > eb) - (ea < eb);
}

int compare_nonpower(const Expr& a, const Expr& b) {
    if (a.node() == b.node()) return 0;
    int ka = kind_rank(a.kind()), kb = kind_rank(b.kind());
    if (ka != kb) return ka < kb ? -1 : 1;
    switch (a.kind()) {
        case Kind::Symbol: return compare_names(a.name(), b.name());
        case Kind::Indexed: {
            if (int c = compare_names(a.name(), b.name())) return c;
            if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
            for (int i = 0; i < 3; ++i)
                if (a.offset()[i] != b.offset()[i]) return a.offset()[i] < b.offset()[i] ? -1 : 1;
            return 0;
        }
        default: {
            const auto& xa = a.args();
            const auto& xb = b.args();
            std::size_t n = std::min(xa.size(), xb.size());
            for (std::size_t i = 0; i < n; ++i)
                if (int c = compare_impl(xa[i], xb[i])) return c;
            if (xa.size() != xb.size()) return xa.size() < xb.size() ? -1 : 1;
            return 0;
        }
    }
}

bool deep_equal(const Expr& a, const Expr& b) {
    if (a.node() == b.node()) return true;
    if (a.hash() != b.hash() || a.kind() != b.kind()) return false;
    const Node& x = *a.node();
    const Node& y = *b.node();
    switch (x.kind) {
        case Kind::Rational: return x.value == y.value;
        case Kind::Symbol: return x.name == y.name;
        case Kind::Indexed: return x.name == y.name && x.offset == y.offset && x.index == y.index;
        default:
            if (x.exponent != y.exponent || x.args.size() != y.args.size()) return false;
            for (std::size_t i = 0; i < x.args.size(); ++i)
                if (!deep_equal(x.args[i], y.args[i])) return false;
            return true;
    }
}

Expr make_rational(const Rational& r) {
    if (r.is_zero()) return zero_expr();
    if (r.is_one()) return one_expr();
    auto n = new_node(Kind::Rational);
    n->value = r;
    return finish(n);
}

Expr make_power_node(const Expr& base, int k) {
    auto n = new_node(Kind::Power);
    n->exponent = k;
    n->args = {base};
    return finish(n);
}

// Term comparator for sums: order by the non-numeric part first.
bool term_less(const std::pair<Expr, Rational>& a, const std::pair<Expr, Rational>& b) {
    int c = compare(a.first, b.first);
    if (c) return c < 0;
    return a.second < b.second;
}

Expr make_term(const Rational& c, const Expr& rest) {
    if (c.is_one()) return rest;
    if (rest.is_product()) {
        auto n = new_node(Kind::Product);
        n->args.reserve(rest.args().size() + 1);
        n->args.push_back(make_rational(c));
        for (const auto& a : rest.args()) n->args.push_back(a);
        return finish(n);
    }
    if (rest.is_sum()) return product({make_rational(c), rest});
    auto n = new_node(Kind::Product);
    n->args = {make_rational(c), rest};
    return finish(n);
}

void print(std::ostream& os, const Expr& e);

void print_factor(std::ostream& os, const Expr& e) {
    if (e.is_sum() || (e.is_rational() && (!e.value().is_integer() || e.value().is_negative())) ||
        e.is_product()) {
        os << '(';
        print(os, e);
        os << ')';
    } else {
        print(os, e);
    }
}

void print_power_abs(std::ostream& os, const Expr& base, int k) {
    print_factor(os, base);
    if (k != 1) os << '^' << k;
}

void print_product(std::ostream& os, const Expr& e) {
    Rational coeff(1);
    std::vector<const Expr*> num, den;
    for (const auto& a : e.args()) {
        if (a.is_rational()) {
            coeff = a.value();
        } else if (a.is_power() && a.exponent() < 0) {
            den.push_back(&a);
        } else {
            num.push_back(&a);
        }
    }
    if (coeff.is_negative()) {
        os << '-';
        coeff = -coeff;
    }
    bool first = true;
    if (coeff.num() != 1 || num.empty()) {
        os << coeff.num();
        first = false;
    }
    for (const Expr* f : num) {
        if (!first) os << '*';
        first = false;
        if (f->is_power())
            print_power_abs(os, f->base(), f->exponent());
        else
            print_factor(os, *f);
    }
    std::size_t dcount = den.size() + (coeff.den() != 1 ? 1 : 0);
    if (dcount == 0) return;
    os << '/';
    if (dcount > 1) os << '(';
    bool dfirst = true;
    if (coeff.den() != 1) {
        os << coeff.den();
        dfirst = false;
    }
    for (const Expr* f : den) {
        if (!dfirst) os << '*';
        dfirst = false;
        print_power_abs(os, f->base(), -f->exponent());
    }
    if (dcount > 1) os << ')';
}

void print(std::ostream& os, const Expr& e) {
    switch (e.kind()) {
        case Kind::Rational: os << e.value().str(); break;
        case Kind::Symbol: os << e.name(); break;
        case Kind::Indexed:
            os << e.name() << '[' << e.offset()[0] << ',' << e.offset()[1] << ',' << e.offset()[2] << "]("
               << e.index() << ')';
            break;
        case Kind::Power:
            if (e.exponent() < 0) {
                os << "1/";
                print_power_abs(os, e.base(), -e.exponent());
            } else {
                print_power_abs(os, e.base(), e.exponent());
            }
            break;
        case Kind::Product: print_product(os, e); break;
        case Kind::Sum: {
            bool first = true;
            for (const auto& t : e.args()) {
                std::ostringstream ts;
                print(ts, t);
                std::string s = ts.str();
                if (first) {
                    os << s;
                } else if (!s.empty() && s[0] == '-') {
                    os << " - " << s.substr(1);
                } else {
                    os << " + " << s;
                }
                first = false;
            }
            break;
        }
        case Kind::Sqrt: os << "sqrt("; print(os, e.base()); os << ')'; break;
        case Kind::Log: os << "log("; print(os, e.base()); os << ')'; break;
    }
}

}  // namespace

Expr::Expr() : node_(zero_expr().node_) {}
Expr::Expr(Rational r) : node_(make_rational(r).node_) {}
Expr::Expr(std::int64_t v) : Expr(Rational(v)) {}

Expr Expr::symbol(std::string name) {
    auto n = new_node(Kind::Symbol);
    n->name = std::move(name);
    return finish(n);
}

Expr Expr::indexed(std::string tag, Offset offset, int index) {
    auto n = new_node(Kind::Indexed);
    n->name = std::move(tag);
    n->offset = offset;
    n->index = index;
    return finish(n);
}

Kind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const { return node_->kind == Kind::Rational && node_->value.is_zero(); }
bool Expr::is_one() const { return node_->kind == Kind::Rational && node_->value.is_one(); }
const Rational& Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
const Offset& Expr::offset() const { return node_->offset; }
int Expr::index() const { return node_->index; }
int Expr::exponent() const { return node_->exponent; }
const Expr& Expr::base() const { return node_->args.front(); }
const std::vector<Expr>& Expr::args() const { return node_->args; }
std::size_t Expr::hash() const { return node_->hash; }

std::string Expr::str() const {
    std::ostringstream os;
    print(os, *this);
    return os.str();
}

bool operator==(const Expr& a, const Expr& b) { return deep_equal(a, b); }

int compare(const Expr& a, const Expr& b) { return compare_impl(a, b); }

std::pair<Rational, Expr> split_coefficient(const Expr& e) {
    if (e.is_rational()) return {e.value(), one_expr()};
    if (e.is_product() && e.args().front().is_rational()) {
        const auto& args = e.args();
        if (args.size() == 2) return {args[0].value(), args[1]};
        auto n = new_node(Kind::Product);
        n->args.assign(args.begin() + 1, args.end());
        return {args[0].value(), finish(n)};
    }
    return {Rational(1), e};
}

Expr sum(std::vector<Expr> terms) {
    Rational constant(0);
    ExprMap<std::size_t> slot;
    std::vector<std::pair<Expr, Rational>> items;
    auto add_term = [&](const Expr& t) {
        if (t.is_rational()) {
            constant += t.value();
            return;
        }
        auto [c, rest] = split_coefficient(t);
        auto it = slot.find(rest);
        if (it == slot.end()) {
            slot.emplace(rest, items.size());
            items.emplace_back(rest, c);
        } else {
            items[it->second].second += c;
        }
    };
    for (const auto& t : terms) {
        if (t.is_sum()) {
            for (const auto& c : t.args()) add_term(c);
        } else {
            add_term(t);
        }
    }
    std::erase_if(items, [](const auto& it) { return it.second.is_zero(); });
    std::sort(items.begin(), items.end(), term_less);
    std::vector<Expr> children;
    children.reserve(items.size() + 1);
    if (!constant.is_zero()) children.push_back(make_rational(constant));
    for (const auto& [rest, c] : items) children.push_back(make_term(c, rest));
    if (children.empty()) return zero_expr();
    if (children.size() == 1) return children.front();
    auto n = new_node(Kind::Sum);
    n->args = std::move(children);
    return finish(n);
}

Expr product(std::vector<Expr> factors) {
    Rational coeff(1);
    ExprMap<std::size_t> slot;
    std::vector<std::pair<Expr, int>> items;
    std::vector<Expr> pending;

    auto add_base = [&](const Expr& b, int k) {
        auto it = slot.find(b);
        if (it == slot.end()) {
            slot.emplace(b, items.size());
            items.emplace_back(b, k);
        } else {
            items[it->second].second += k;
        }
    };
    std::function<void(const Expr&)> add = [&](const Expr& f) {
        switch (f.kind()) {
            case Kind::Rational: coeff *= f.value(); break;
            case Kind::Product:
                for (const auto& c : f.args()) add(c);
                break;
            case Kind::Power: add_base(f.base(), f.exponent()); break;
            default: add_base(f, 1);
        }
    };
    for (const auto& f : factors) add(f);
    if (coeff.is_zero()) return zero_expr();

    // sqrt(a)^k with |k| >= 2 folds into a^(k/2).
    for (bool again = true; again;) {
        again = false;
        for (std::size_t i = 0; i < items.size(); ++i) {
            auto& [b, k] = items[i];
            if (b.kind() == Kind::Sqrt && (k >= 2 || k <= -2)) {
                int m = k / 2;
                k -= 2 * m;
                Expr folded = pow(b.base(), m);
                add(folded);
                again = true;
                break;
            }
        }
    }
    std::vector<Expr> fs;
    fs.reserve(items.size());
    for (const auto& [b, k] : items) {
        if (k == 0) continue;
        fs.push_back(k == 1 ? b : make_power_node(b, k));
    }
    std::sort(fs.begin(), fs.end(), ExprLess{});
    if (fs.empty()) return make_rational(coeff);
    if (fs.size() == 1) {
        if (coeff.is_one()) return fs.front();
        if (fs.front().is_sum()) {
            std::vector<Expr> ts;
            ts.reserve(fs.front().args().size());
            for (const auto& t : fs.front().args()) {
                auto [c, rest] = split_coefficient(t);
                ts.push_back(rest.is_one() ? make_rational(c * coeff) : make_term(c * coeff, rest));
            }
            return sum(std::move(ts));
        }
    }
    auto n = new_node(Kind::Product);
    if (!coeff.is_one()) n->args.push_back(make_rational(coeff));
    for (auto& f : fs) n->args.push_back(std::move(f));
    return finish(n);
}

Expr pow(const Expr& base, int k) {
    if (k == 0) return one_expr();
    if (k == 1) return base;
    switch (base.kind()) {
        case Kind::Rational:
            if (base.value().is_zero() && k < 0) throw DomainError("zero raised to a negative power");
            return make_rational(base.value().pow(k));
        case Kind::Power: {
            long long e = static_cast<long long>(base.exponent()) * k;
            if (e > INT32_MAX || e < INT32_MIN) throw DomainError("exponent overflow");
            return pow(base.base(), static_cast<int>(e));
        }
        case Kind::Product: {
            std::vector<Expr> fs;
            fs.reserve(base.args().size());
            for (const auto& f : base.args()) fs.push_back(pow(f, k));
            return product(std::move(fs));
        }
        case Kind::Sqrt: return product({make_power_node(base, k)});
        default: return make_power_node(base, k);
    }
}

Expr sqrt(const Expr& arg) {
    if (arg.is_rational()) {
        const Rational& r = arg.value();
        if (r.is_negative()) throw DomainError("sqrt of negative constant " + r.str());
        auto isqrt = [](std::int64_t v) -> std::int64_t {
            auto s = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(v)));
            while (s * s > v) --s;
            while ((s + 1) * (s + 1) <= v) ++s;
            return s;
        };
        std::int64_t sn = isqrt(r.num()), sd = isqrt(r.den());
        if (sn * sn == r.num() && sd * sd == r.den()) return make_rational(Rational(sn, sd));
    }
    auto n = new_node(Kind::Sqrt);
    n->args = {arg};
    return finish(n);
}

Expr log(const Expr& arg) {
    if (arg.is_rational()) {
        if (arg.value().is_one()) return zero_expr();
        if (arg.value().sign() <= 0) throw DomainError("log of non-positive constant " + arg.value().str());
    }
    auto n = new_node(Kind::Log);
    n->args = {arg};
    return finish(n);
}

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, product({make_rational(Rational(-1)), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) {
    if (b.is_zero()) throw DomainError("division by zero");
    return product({a, pow(b, -1)});
}
Expr operator-(const Expr& a) { return product({make_rational(Rational(-1)), a}); }

void collect_leaves(const Expr& e, std::vector<Expr>& out) {
    if (e.is_leaf()) {
        out.push_back(e);
        return;
    }
    if (e.is_rational()) return;
    for (const auto& a : e.args()) collect_leaves(a, out);
}

std::vector<Expr> free_symbols(const Expr& e) {
    std::vector<Expr> all;
    collect_leaves(e, all);
    std::sort(all.begin(), all.end(), ExprLess{});
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

bool contains(const Expr& e, const Expr& leaf) {
    if (e == leaf) return true;
    if (e.is_rational() || e.is_leaf()) return false;
    for (const auto& a : e.args())
        if (contains(a, leaf)) return true;
    return false;
}

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << e.str(); }

}  // namespace lbmc::sym
