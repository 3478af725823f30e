#pragma once

#include <array>
#include <string>
#include <vector>

#include "lbmc/sym/rational.hpp"

namespace lbmc::lattice {

using Vec = std::array<int, 3>;

/// A DdQq velocity set.
///
/// Directions are ordered by Manhattan length and then lexicographically on
/// their components, so the rest population is always index 0. Emitted
/// kernels, index lists and tableaus all rely on this order.
struct Stencil {
    std::string name;
    int d = 0;
    int q = 0;
    std::vector<Vec> c;
    std::vector<sym::Rational> w;
    sym::Rational cs2{1, 3};
    std::vector<int> opp;

    int opposite(int i) const;
    int index_of(const Vec& v) const;  // -1 if absent
};

/// Supported names: D2Q9, D3Q15, D3Q19, D3Q27.
Stencil builtin(const std::string& name);

std::vector<std::string> builtin_names();

/// Checks the weight and isotropy conditions exactly; throws on violation.
void validate(const Stencil& s);

}  // namespace lbmc::lattice
