#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lbmc/error.hpp"
#include "lbmc/methods/entropic.hpp"
#include "lbmc/methods/method.hpp"
#include "lbmc/simplify/simplify.hpp"

using namespace lbmc;
using namespace lbmc::simplify;
using methods::CollisionRule;
using methods::MethodSpec;
using sym::Expr;
using sym::rat;

namespace {

Expr S(const char* n) { return sym::sym(n); }

methods::RateMap mrt_rates() {
    return {{"shear", S("omega_0")}, {"bulk", S("omega_1")}, {"3", S("omega_2")},
            {"4", S("omega_3")},     {"5", S("omega_4")},    {"6", S("omega_5")}};
}

MethodSpec smagorinsky_srt(const lattice::Stencil& s) {
    MethodSpec m = methods::create_srt(s, S("omega"));
    m.rate_definitions.push_back({S("omega"), methods::smagorinsky_rate(S("nu_0"), S("C_S"), m)});
    return m;
}

/// Evaluates a rule in order; every symbol not produced by the rule itself
/// must be in `b`.
std::vector<double> evaluate(const CollisionRule& r, const std::vector<double>& f, sym::Bindings b) {
    for (std::size_t q = 0; q < f.size(); ++q) b[r.pre[q].name()] = f[q];
    for (const auto& a : r.subexpressions) b[a.target.name()] = sym::eval_f64(a.value, b);
    std::vector<double> out;
    for (const auto& o : r.outputs) out.push_back(sym::eval_f64(o.value, b));
    return out;
}

struct RandomInputs {
    std::vector<double> f;
    sym::Bindings params;
};

/// Positive populations with density near 1, plus random rates in (0.6, 1.8).
RandomInputs random_inputs(const lattice::Stencil& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    RandomInputs in;
    for (int q = 0; q < s.q; ++q) in.f.push_back(s.w[static_cast<std::size_t>(q)].to_double() * (0.8 + 0.4 * U(rng)));
    for (const char* n : {"omega", "omega_e", "omega_o", "omega_0", "omega_1", "omega_2", "omega_3", "omega_4",
                          "omega_5", "omega_s"})
        in.params[n] = 0.6 + 1.2 * U(rng);
    in.params["nu_0"] = 0.01 + 0.05 * U(rng);
    in.params["C_S"] = 0.1 + 0.1 * U(rng);
    return in;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
    return m;
}

void expect_equivalent(const CollisionRule& ref, const CollisionRule& got, int samples, const std::string& what) {
    std::mt19937_64 rng(17);
    double worst = 0;
    for (int k = 0; k < samples; ++k) {
        auto in = random_inputs(ref.stencil, rng);
        worst = std::max(worst, max_rel(evaluate(got, in.f, in.params), evaluate(ref, in.f, in.params)));
    }
    EXPECT_LT(worst, 1e-12) << what;
}

/// A hand-built rule on D2Q9 with the given outputs and no subexpressions.
CollisionRule bare_rule(std::vector<Expr> values) {
    CollisionRule r;
    r.stencil = lattice::builtin("D2Q9");
    r.pre = equilibria::pdfs(9);
    r.post = equilibria::post_pdfs(9);
    r.density = equilibria::rho();
    r.velocity = equilibria::velocities(2);
    r.rates = {S("omega")};
    for (std::size_t i = 0; i < values.size(); ++i) r.outputs.push_back({r.post[i], values[i]});
    return r;
}

bool has_subexpression_value(const CollisionRule& r, const Expr& v) {
    return std::any_of(r.subexpressions.begin(), r.subexpressions.end(),
                       [&](const sym::Assignment& a) { return sym::expand(a.value - v).is_zero(); });
}

}  // namespace

TEST(QuadraticVelocityProducts, MixedProductReplaced) {
    const Expr u0 = equilibria::velocity(0), u1 = equilibria::velocity(1);
    auto r = bare_rule({S("omega") * equilibria::rho() * u0 * u1});
    auto out = replace_quadratic_velocity_products(r);
    ASSERT_EQ(out.subexpressions.size(), 1u);
    const Expr e = out.subexpressions[0].target;
    EXPECT_EQ(out.subexpressions[0].value, u0 + u1);
    Expr want = S("omega") * equilibria::rho() * rat(1, 2) * (e * e - u0 * u0 - u1 * u1);
    EXPECT_TRUE(sym::expand(out.outputs[0].value - want).is_zero()) << out.outputs[0].value;
    EXPECT_TRUE(sym::expand(out.inlined()[0] - r.outputs[0].value).is_zero());
}

TEST(QuadraticVelocityProducts, NoMixedProductsUnchanged) {
    const Expr u0 = equilibria::velocity(0);
    auto r = bare_rule({S("omega") * u0 * u0 + u0});
    auto out = replace_quadratic_velocity_products(r);
    EXPECT_TRUE(out.subexpressions.empty());
    EXPECT_EQ(out.outputs[0].value, r.outputs[0].value);
}

TEST(QuadraticVelocityProducts, OnePairSymbolPerPair) {
    const Expr u0 = equilibria::velocity(0), u1 = equilibria::velocity(1);
    auto r = bare_rule({u0 * u1, S("omega") * u0 * u1, -u1 * u0 * equilibria::rho()});
    auto out = replace_quadratic_velocity_products(r);
    EXPECT_EQ(out.subexpressions.size(), 1u);
    auto in = out.inlined();
    for (std::size_t i = 0; i < in.size(); ++i)
        EXPECT_TRUE(sym::expand(in[i] - r.outputs[i].value).is_zero()) << i;
}

TEST(CommonQuadraticTerm, StandardEquilibriumStencils) {
    const Expr rho = equilibria::rho();
    for (const char* name : {"D2Q9", "D3Q27"}) {
        auto s = lattice::builtin(name);
        auto r = methods::assemble_collision_rule(methods::create_trt(s, S("omega_e"), S("omega_o")));
        Expr usq(0);
        for (int i = 0; i < s.d; ++i) usq = usq + equilibria::velocity(i) * equilibria::velocity(i);
        Expr want = rho - rat(3, 2) * rho * usq;
        EXPECT_TRUE(sym::expand(common_quadratic_term(r) - want).is_zero()) << name << ": " << common_quadratic_term(r);
    }
}

TEST(CommonQuadraticTerm, MomentMatchedD3Q19) {
    // The moment-matched D3Q19 equilibrium differs from the standard one, and
    // so does its rest-direction value.
    auto s = lattice::builtin("D3Q19");
    auto m = methods::create_trt(s, S("omega_e"), S("omega_o"));
    auto r = methods::assemble_collision_rule(m);
    int c = s.index_of({0, 0, 0});
    Expr feq0 = sym::expand(methods::method_equilibrium(m)[static_cast<std::size_t>(c)]);
    Expr want = sym::expand(feq0 / Expr(s.w[static_cast<std::size_t>(c)]));
    EXPECT_TRUE(sym::expand(common_quadratic_term(r) - want).is_zero()) << common_quadratic_term(r);
    const Expr rho = equilibria::rho();
    Expr usq(0);
    for (int i = 0; i < 3; ++i) usq = usq + equilibria::velocity(i) * equilibria::velocity(i);
    EXPECT_TRUE(sym::expand(common_quadratic_term(r) - (rho - rho * usq)).is_zero());
}

TEST(CommonQuadraticTerm, RestStateGivesDensityOnly) {
    const Expr rho = equilibria::rho(), w = S("omega");
    std::vector<Expr> outs;
    auto s = lattice::builtin("D2Q9");
    for (int q = 0; q < 9; ++q) {
        Expr f = equilibria::pdfs(9)[static_cast<std::size_t>(q)];
        outs.push_back(f + w * (Expr(s.w[static_cast<std::size_t>(q)]) * rho - f));
    }
    auto r = bare_rule(outs);
    EXPECT_EQ(common_quadratic_term(r), rho);
    auto out = extract_common_quadratic_term(r);
    EXPECT_EQ(out.subexpressions.size(), 0u);
}

TEST(CommonQuadraticTerm, ExtractionIsEquivalent) {
    for (const char* name : {"D2Q9", "D3Q19"}) {
        auto r = methods::assemble_collision_rule(methods::create_srt(lattice::builtin(name), S("omega")));
        auto prepared = factor_rates(expand_outputs(r));
        auto out = extract_common_quadratic_term(prepared);
        EXPECT_LT(out.flops().total(), prepared.flops().total()) << name;
        expect_equivalent(r, out, 200, name);
    }
}

TEST(SubstituteExistingSubexpressions, DensitySumRefound) {
    const Expr f0 = S("f_0"), f1 = S("f_1"), f2 = S("f_2"), rho = equilibria::rho(), x = S("x");
    auto r = bare_rule({3 * f0 + 3 * f1 + 3 * f2 + x});
    r.subexpressions.push_back({rho, f0 + f1 + f2});
    auto out = substitute_existing_subexpressions(r);
    EXPECT_TRUE(sym::expand(out.outputs[0].value - (3 * rho + x)).is_zero()) << out.outputs[0].value;
}

TEST(SubstituteExistingSubexpressions, NoMatchUnchanged) {
    const Expr f0 = S("f_0"), f1 = S("f_1"), f2 = S("f_2"), rho = equilibria::rho();
    auto r = bare_rule({3 * f0 + 2 * f1 + f2});
    r.subexpressions.push_back({rho, f0 + f1 + f2});
    auto out = substitute_existing_subexpressions(r);
    EXPECT_EQ(out.outputs[0].value, r.outputs[0].value);
}

TEST(SubstituteExistingSubexpressions, NestedMatchInsideProduct) {
    const Expr f0 = S("f_0"), f1 = S("f_1"), f2 = S("f_2"), rho = equilibria::rho();
    const Expr w = S("omega"), y = S("y");
    auto r = bare_rule({w * y * (2 * f0 + 2 * f1 + 2 * f2 + y) + f0});
    r.subexpressions.push_back({rho, f0 + f1 + f2});
    auto out = substitute_existing_subexpressions(r);
    EXPECT_TRUE(sym::expand(out.outputs[0].value - (w * y * (2 * rho + y) + f0)).is_zero()) << out.outputs[0].value;
    auto in = out.inlined();
    EXPECT_TRUE(sym::expand(in[0] - r.outputs[0].value).is_zero());
}

TEST(SubstituteExistingSubexpressions, VelocityNumeratorRefound) {
    const Expr f1 = S("f_1"), f3 = S("f_3"), rho = equilibria::rho(), u0 = equilibria::velocity(0);
    const Expr f5 = S("f_5"), f6 = S("f_6");
    auto r = bare_rule({S("omega") * (f1 - f3 + f5 - f6)});
    r.subexpressions.push_back({rho, S("f_0") + f1 + f3 + f5 + f6});
    r.subexpressions.push_back({u0, (f1 - f3 + f5 - f6) / rho});
    auto out = substitute_existing_subexpressions(r);
    EXPECT_TRUE(sym::expand(out.outputs[0].value - S("omega") * rho * u0).is_zero()) << out.outputs[0].value;
}

TEST(DirectionAwareCse, OpposingPairSharesBothParts) {
    const Expr a = S("a"), b = S("b"), c = S("c"), d = S("d");
    auto s = lattice::builtin("D2Q9");
    int q = 1, o = s.opposite(1);
    std::vector<Expr> outs = equilibria::pdfs(9);
    outs[static_cast<std::size_t>(q)] = a * b + c + d * a + b * c * d;
    outs[static_cast<std::size_t>(o)] = a * b + c - d * a - b * c * d;
    auto r = bare_rule(outs);
    auto out = direction_aware_cse(r);
    EXPECT_TRUE(has_subexpression_value(out, a * b + c));
    EXPECT_TRUE(has_subexpression_value(out, d * a + b * c * d));
    auto in = out.inlined();
    for (std::size_t i = 0; i < in.size(); ++i)
        EXPECT_TRUE(sym::expand(in[i] - outs[i]).is_zero()) << i;
    EXPECT_LT(out.flops().total(), global_cse(r).flops().total() + 1);
}

TEST(DirectionAwareCse, WithoutDirectionalOutputsReducesToGlobalCse) {
    const Expr a = S("a"), b = S("b");
    auto r = bare_rule({(a + b) * (a + b) * a});
    auto d = direction_aware_cse(r);
    auto g = global_cse(r);
    EXPECT_EQ(d.flops(), g.flops());
    ASSERT_EQ(d.outputs.size(), 1u);
    EXPECT_EQ(d.outputs[0].value, g.outputs[0].value);
}

TEST(Strategies, EveryStagePreservesValues) {
    for (const char* name : {"D2Q9", "D3Q19"}) {
        auto s = lattice::builtin(name);
        std::vector<std::pair<std::string, MethodSpec>> ms = {
            {"srt", methods::create_srt(s, S("omega"))},
            {"trt", methods::create_trt(s, S("omega_e"), S("omega_o"))},
            {"mrt", methods::create_mrt(s, mrt_rates(), true)},
            {"smagorinsky", smagorinsky_srt(s)},
        };
        for (const auto& [label, m] : ms) {
            auto r = methods::assemble_collision_rule(m);
            CollisionRule cur = r;
            auto check = [&](const CollisionRule& next, const char* stage) {
                expect_equivalent(r, next, 100, std::string(name) + " " + label + " " + stage);
                cur = next;
            };
            check(expand_outputs(cur), "expand");
            check(replace_quadratic_velocity_products(cur), "quadratic");
            check(expand_outputs(cur), "expand");
            check(factor_rates(cur), "factor");
            check(extract_common_quadratic_term(cur), "common");
            check(substitute_existing_subexpressions(cur), "substitute");
            check(direction_aware_cse(cur), "direction");
        }
    }
}

TEST(Strategies, ReportMatchesReturnedRule) {
    auto r = methods::assemble_collision_rule(methods::create_trt(lattice::builtin("D2Q9"), S("omega_e"), S("omega_o")));
    for (Strategy st : {Strategy::OnlyCse, Strategy::CustomDirection, Strategy::CustomDefault}) {
        auto x = run_strategy(r, st);
        EXPECT_EQ(x.report.final_flops(), x.rule.flops()) << strategy_name(st);
        EXPECT_EQ(x.report.stages.front().flops, r.flops());
        EXPECT_EQ(x.report.strategy, strategy_name(st));
    }
    auto custom = run_strategy(r, Strategy::CustomDefault);
    std::vector<std::string> names;
    for (const auto& st : custom.report.stages) names.push_back(st.name);
    std::vector<std::string> want = {"initial", "expand", "quadratic velocity prod.", "expand", "factor rates",
                                     "common quadratic term", "substitute existing subexpr.", "cse"};
    EXPECT_EQ(names, want);
    EXPECT_EQ(run_strategy(r, Strategy::CustomDirection).report.stages.back().name, "direction cse");
    EXPECT_EQ(run_strategy(r, Strategy::OnlyCse).report.stages.size(), 2u);
}

TEST(Strategies, EmptyRuleReportsZero) {
    auto r = bare_rule({});
    for (Strategy st : {Strategy::OnlyCse, Strategy::CustomDirection, Strategy::CustomDefault})
        EXPECT_EQ(run_strategy(r, st).report.final_flops().total(), 0);
}

TEST(Strategies, SelectBestIsMinimalWithTieBreak) {
    auto trivial = bare_rule({S("x") * S("y")});
    auto t = select_best(trivial);
    EXPECT_EQ(t.report.strategy, "only_cse");
    EXPECT_EQ(t.report.final_flops().total(), 1);

    auto s = lattice::builtin("D3Q19");
    auto r = methods::assemble_collision_rule(methods::create_srt(s, S("omega")));
    auto best = select_best(r);
    for (Strategy st : {Strategy::OnlyCse, Strategy::CustomDirection, Strategy::CustomDefault})
        EXPECT_LE(best.report.final_flops().total(), run_strategy(r, st).report.final_flops().total());
    EXPECT_NE(best.report.strategy, "only_cse");

    auto mrt = methods::assemble_collision_rule(methods::create_mrt(lattice::builtin("D2Q9"), mrt_rates(), false));
    EXPECT_EQ(select_best(mrt).report.strategy, "only_cse");
}

TEST(Strategies, CustomBeatsCseExceptForMrt) {
    equilibria::EquilibriumSpec inc;
    inc.compressible = false;
    for (const char* name : {"D2Q9", "D3Q19"}) {
        auto s = lattice::builtin(name);
        auto total = [](const CollisionRule& r, Strategy st) { return run_strategy(r, st).report.final_flops().total(); };
        auto best_custom = [&](const CollisionRule& r) {
            return std::min(total(r, Strategy::CustomDirection), total(r, Strategy::CustomDefault));
        };
        std::vector<MethodSpec> custom_wins = {
            methods::create_srt(s, S("omega")),
            methods::create_srt(s, S("omega"), inc),
            methods::create_trt(s, S("omega_e"), S("omega_o")),
            methods::create_trt(s, S("omega_e"), S("omega_o"), inc),
            smagorinsky_srt(s),
        };
        for (std::size_t i = 0; i < custom_wins.size(); ++i) {
            auto r = methods::assemble_collision_rule(custom_wins[i]);
            EXPECT_LE(best_custom(r), total(r, Strategy::OnlyCse)) << name << " #" << i;
        }
        std::vector<MethodSpec> cse_wins = {
            methods::create_mrt(s, mrt_rates(), false),
            methods::create_mrt(s, mrt_rates(), true),
            methods::create_mrt(s, mrt_rates(), true, inc),
        };
        for (std::size_t i = 0; i < cse_wins.size(); ++i) {
            auto r = methods::assemble_collision_rule(cse_wins[i]);
            EXPECT_LE(total(r, Strategy::OnlyCse), best_custom(r)) << name << " mrt #" << i;
        }
    }
}

TEST(Strategies, ParseNames) {
    EXPECT_EQ(parse_strategy("only_cse"), Strategy::OnlyCse);
    EXPECT_EQ(parse_strategy("custom_direction"), Strategy::CustomDirection);
    EXPECT_EQ(parse_strategy("custom_default"), Strategy::CustomDefault);
    EXPECT_THROW(parse_strategy("fastest"), ConfigError);
}

TEST(Strategies, RenderedReportListsStages) {
    auto r = methods::assemble_collision_rule(methods::create_srt(lattice::builtin("D2Q9"), S("omega")));
    auto x = run_strategy(r, Strategy::CustomDefault);
    std::string text = render_report(x.report);
    for (const auto& st : x.report.stages) EXPECT_NE(text.find(st.name), std::string::npos) << st.name;
    EXPECT_NE(text.find(std::to_string(x.report.final_flops().total())), std::string::npos);
}
