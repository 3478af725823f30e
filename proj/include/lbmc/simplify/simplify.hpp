#pragma once

#include <string>
#include <vector>

#include "lbmc/methods/method.hpp"

namespace lbmc::simplify {

using methods::CollisionRule;
using sym::FlopCount;

enum class Strategy { OnlyCse, CustomDirection, CustomDefault };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);  // "only_cse", "custom_direction", "custom_default"

struct Stage {
    std::string name;
    FlopCount flops;
};

struct SimplificationReport {
    std::vector<Stage> stages;
    std::string strategy;
    FlopCount final_flops() const { return stages.empty() ? FlopCount{} : stages.back().flops; }
};

struct Simplified {
    CollisionRule rule;
    SimplificationReport report;
};

CollisionRule expand_outputs(const CollisionRule& r);
CollisionRule replace_quadratic_velocity_products(const CollisionRule& r);
CollisionRule factor_rates(const CollisionRule& r);
/// Center output with populations set to 0 and rates to 1, scaled so the
/// density term has coefficient one.
sym::Expr common_quadratic_term(const CollisionRule& r);
CollisionRule extract_common_quadratic_term(const CollisionRule& r);
CollisionRule substitute_existing_subexpressions(const CollisionRule& r);
CollisionRule direction_aware_cse(const CollisionRule& r);
CollisionRule global_cse(const CollisionRule& r);

Simplified run_strategy(const CollisionRule& r, Strategy s);
Simplified select_best(const CollisionRule& r);

/// Plain-text table: one row per stage with adds, muls, divs, sqrts, logs
/// and total.
std::string render_report(const SimplificationReport& rep);

}  // namespace lbmc::simplify
