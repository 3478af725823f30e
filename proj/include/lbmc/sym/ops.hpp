#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lbmc/sym/expr.hpp"

namespace lbmc::sym {

struct Assignment {
    Expr target;
    Expr value;
};

struct FlopCount {
    long adds = 0;
    long muls = 0;
    long divs = 0;
    long sqrts = 0;
    long logs = 0;

    long total() const { return adds + muls + divs + sqrts + logs; }
    FlopCount& operator+=(const FlopCount& o) {
        adds += o.adds;
        muls += o.muls;
        divs += o.divs;
        sqrts += o.sqrts;
        logs += o.logs;
        return *this;
    }
    friend bool operator==(const FlopCount&, const FlopCount&) = default;
};

Expr expand(const Expr& e);

/// Groups the terms of a sum by the first symbol of `syms` they contain as a
/// factor: the result is s0*(...) + s1*(...) + remainder.
Expr collect(const Expr& e, const std::vector<Expr>& syms);

/// Simultaneous substitution of whole subtrees (usually leaves).
Expr substitute(const Expr& e, const ExprMap<Expr>& bindings);

Expr differentiate(const Expr& e, const Expr& s);

using Bindings = std::unordered_map<std::string, double>;
using LeafReader = std::function<double(const Expr&)>;

/// IEEE double evaluation with a fixed child order. Symbols are looked up by
/// name in `bindings`; indexed leaves go through `reader`.
double eval_f64(const Expr& e, const Bindings& bindings, const LeafReader& reader = {});

FlopCount count_flops(const Expr& e);
FlopCount count_flops(const std::vector<Assignment>& assignments);

struct CseResult {
    std::vector<Assignment> subexpressions;
    std::vector<Assignment> mains;
};

/// Greedy common subexpression elimination. Existing subexpression
/// assignments in `subs` are kept (their values may be rewritten) and new
/// ones are named `<prefix><n>`. The returned subexpression list is
/// topologically ordered.
CseResult global_cse(const std::vector<Assignment>& subs, const std::vector<Assignment>& mains,
                     const std::string& prefix = "xi_");
inline CseResult global_cse(const std::vector<Assignment>& mains) { return global_cse({}, mains); }

/// Substitutes every subexpression into the mains (in order) and returns
/// the fully inlined main values.
std::vector<Expr> inline_all(const std::vector<Assignment>& subs, const std::vector<Assignment>& mains);

/// Orders assignments so that every target is defined before use. Ties keep
/// the input order.
std::vector<Assignment> topological_order(const std::vector<Assignment>& subs);

}  // namespace lbmc::sym
