#include "lbmc/lattice/stencil.hpp"

#include <algorithm>
#include <cstdlib>

namespace lbmc::lattice {

using sym::Rational;

namespace {

int manhattan(const Vec& v) { return std::abs(v[0]) + std::abs(v[1]) + std::abs(v[2]); }

Stencil make(const std::string& name, int d, const std::vector<int>& keep_lengths, const std::vector<Rational>& w_by_len) {
    Stencil s;
    s.name = name;
    s.d = d;
    for (int x = -1; x <= 1; ++x)
        for (int y = -1; y <= 1; ++y)
            for (int z = -1; z <= 1; ++z) {
                if (d == 2 && z != 0) continue;
                Vec v{x, y, z};
                if (std::find(keep_lengths.begin(), keep_lengths.end(), manhattan(v)) != keep_lengths.end())
                    s.c.push_back(v);
            }
    std::stable_sort(s.c.begin(), s.c.end(), [](const Vec& a, const Vec& b) {
        int la = manhattan(a), lb = manhattan(b);
        if (la != lb) return la < lb;
        return a < b;
    });
    s.q = static_cast<int>(s.c.size());
    for (const auto& v : s.c) s.w.push_back(w_by_len[manhattan(v)]);
    for (const auto& v : s.c) s.opp.push_back(s.index_of({-v[0], -v[1], -v[2]}));
    validate(s);
    return s;
}

}  // namespace

int Stencil::opposite(int i) const {
    if (i < 0 || i >= q) throw ConfigError("direction index " + std::to_string(i) + " out of range for " + name);
    return opp[i];
}

int Stencil::index_of(const Vec& v) const {
    for (int i = 0; i < q; ++i)
        if (c[i] == v) return i;
    return -1;
}

std::vector<std::string> builtin_names() { return {"D2Q9", "D3Q15", "D3Q19", "D3Q27"}; }

Stencil builtin(const std::string& name) {
    if (name == "D2Q9") return make(name, 2, {0, 1, 2}, {Rational(4, 9), Rational(1, 9), Rational(1, 36)});
    if (name == "D3Q15") return make(name, 3, {0, 1, 3}, {Rational(2, 9), Rational(1, 9), 0, Rational(1, 72)});
    if (name == "D3Q19") return make(name, 3, {0, 1, 2}, {Rational(1, 3), Rational(1, 18), Rational(1, 36)});
    if (name == "D3Q27")
        return make(name, 3, {0, 1, 2, 3}, {Rational(8, 27), Rational(2, 27), Rational(1, 54), Rational(1, 216)});
    std::string list;
    for (const auto& n : builtin_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown stencil '" + name + "' (supported: " + list + ")");
}

void validate(const Stencil& s) {
    auto fail = [&](const std::string& what) { throw Error("stencil " + s.name + " violates " + what); };
    Rational total(0);
    for (const auto& w : s.w) total += w;
    if (!total.is_one()) fail("sum of weights = 1");
    for (int i = 0; i < s.d; ++i) {
        Rational m1(0);
        for (int k = 0; k < s.q; ++k) m1 += s.w[k] * s.c[k][i];
        if (!m1.is_zero()) fail("first moment isotropy");
        for (int j = 0; j < s.d; ++j) {
            Rational m2(0);
            for (int k = 0; k < s.q; ++k) m2 += s.w[k] * (s.c[k][i] * s.c[k][j]);
            if (m2 != (i == j ? s.cs2 : Rational(0))) fail("second moment isotropy");
            for (int l = 0; l < s.d; ++l) {
                Rational m3(0);
                for (int k = 0; k < s.q; ++k) m3 += s.w[k] * (s.c[k][i] * s.c[k][j] * s.c[k][l]);
                if (!m3.is_zero()) fail("third moment isotropy");
            }
        }
    }
    for (int k = 0; k < s.q; ++k) {
        if (s.opp[k] < 0 || s.opp[s.opp[k]] != k) fail("opposite involution");
    }
    if (manhattan(s.c[0]) != 0) fail("center first ordering");
}

}  // namespace lbmc::lattice
