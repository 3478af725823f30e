#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "lbmc/config/config.hpp"
#include "lbmc/equilibria/equilibrium.hpp"
#include "lbmc/error.hpp"
#include "lbmc/kernel/emit.hpp"
#include "lbmc/methods/entropic.hpp"

namespace fs = std::filesystem;
using namespace lbmc;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kConfigError = 2;

void write_file(const fs::path& p, const std::string& content, bool binary = false) {
    std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
    if (!out || !(out << content)) throw RuntimeFailure("cannot write " + p.string());
}

fs::path output_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

config::Config load(const std::string& path, const std::string& strategy) {
    auto c = config::load_config(path);
    if (strategy == "best")
        c.strategy.reset();
    else if (!strategy.empty())
        c.strategy = simplify::parse_strategy(strategy);
    return c;
}

int cmd_derive(const config::Config& c) {
    std::cout << methods::tableau(c.method);
    return 0;
}

int cmd_flops(const config::Config& c) {
    const auto rule = config::assemble(c);
    std::vector<simplify::Strategy> strategies;
    if (c.strategy)
        strategies.push_back(*c.strategy);
    else
        strategies = {simplify::Strategy::OnlyCse, simplify::Strategy::CustomDirection,
                      simplify::Strategy::CustomDefault};
    std::optional<simplify::Simplified> best;
    for (auto s : strategies) {
        auto r = simplify::run_strategy(rule, s);
        std::cout << "strategy " << simplify::strategy_name(s) << "\n" << simplify::render_report(r.report) << "\n";
        if (!best || r.report.final_flops().total() < best->report.final_flops().total()) best = std::move(r);
    }
    std::cout << "selected " << best->report.strategy << " with " << best->report.final_flops().total()
              << " FLOPs\n";
    return 0;
}

int cmd_emit(const config::Config& c, const std::string& out) {
    if (out.empty()) throw ConfigError("--out: emit needs an output directory");
    const auto rule = config::simplify_rule(c).rule;
    const auto dir = output_dir(out);
    std::string abi;
    for (const auto& k : config::kernels(c, rule)) {
        auto src = kernel::emit(k, k.name);
        write_file(dir / (k.name + ".c"), src.code);
        abi += src.abi + "\n";
        std::cout << (dir / (k.name + ".c")).string() << "\n";
    }
    write_file(dir / "abi.txt", abi);
    return 0;
}

int cmd_simulate(const config::Config& c, const std::string& out) {
    const auto rule = config::simplify_rule(c).rule;
    const auto sc = config::scenario_config(c, rule);
    const auto result = sim::run_scenario(sc);

    std::ostringstream line;
    line << sim::scenario_name(sc.kind) << ":";
    line.precision(10);
    for (const auto& [k, v] : result.summary) line << " " << k << "=" << v;
    std::cout << line.str() << "\n";

    if (!out.empty()) {
        const auto dir = output_dir(out);
        std::ostringstream samples;
        sim::write_samples(samples, result.samples);
        write_file(dir / "observables.csv", samples.str());
        std::ostringstream summary;
        summary.precision(17);
        for (const auto& [k, v] : result.summary) summary << k << " = " << v << "\n";
        write_file(dir / "summary.txt", summary.str());
        for (const auto& s : result.snapshots) {
            std::ostringstream bin;
            sim::write_snapshot(bin, s);
            write_file(dir / ("velocity_" + std::to_string(s.step) + ".bin"), bin.str(), true);
        }
    }
    if (!result.converged) {
        std::cerr << "error: no steady state within " << sc.steps << " steps\n";
        return kRuntimeFailure;
    }
    return 0;
}

/// Compares the simplified rule with the unsimplified one on random states.
int cmd_check(const config::Config& c, std::uint64_t seed, int samples) {
    const auto initial = config::assemble(c);
    const auto simplified = config::simplify_rule(c);
    const auto& s = initial.stencil;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::set<std::string> free;
    for (const auto& e : initial.inlined())
        for (const auto& n : sym::free_symbols(e)) free.insert(n.name());
    for (const auto& f : equilibria::pdfs(s.q)) free.erase(f.name());

    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        sym::Bindings b;
        for (int q = 0; q < s.q; ++q)
            b["f_" + std::to_string(q)] = s.w[static_cast<std::size_t>(q)].to_double() * (0.8 + 0.4 * unit(rng));
        for (const auto& n : free) {
            auto it = c.params.find(n);
            b[n] = it != c.params.end() ? it->second : 0.6 + 1.2 * unit(rng);
        }
        auto a = initial.evaluate(b);
        auto r = simplified.rule.evaluate(b);
        for (std::size_t q = 0; q < a.size(); ++q) worst = std::max(worst, std::abs(a[q] - r[q]) / std::max(1.0, std::abs(a[q])));
    }
    std::cout << "strategy " << simplified.report.strategy << ": max relative deviation " << worst << " over "
              << samples << " random states (seed " << seed << ")\n";
    return worst <= 1e-12 ? 0 : kRuntimeFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lattice Boltzmann method derivation, simplification, code generation and simulation"};
    app.require_subcommand(1);
    std::string config_path, out, strategy;
    std::uint64_t seed = 42;
    int samples = 100;
    app.add_option("--strategy", strategy, "simplification strategy: best, only_cse, custom_direction, custom_default");

    auto* derive = app.add_subcommand("derive", "print the moment/equilibrium/rate tableau");
    auto* flops = app.add_subcommand("flops", "print FLOP counts per strategy and stage");
    auto* emit = app.add_subcommand("emit", "write C kernels and their ABI description");
    auto* simulate = app.add_subcommand("simulate", "run the configured scenario");
    auto* check = app.add_subcommand("check", "compare the simplified rule with the unsimplified one on random states");
    for (auto* sc : {derive, flops, emit, simulate, check})
        sc->add_option("config", config_path, "JSON configuration file")->required();
    for (auto* sc : {emit, simulate}) sc->add_option("--out", out, "output directory");
    check->add_option("--seed", seed, "random seed");
    check->add_option("--samples", samples, "number of random states")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        const auto c = load(config_path, strategy);
        if (*derive) return cmd_derive(c);
        if (*flops) return cmd_flops(c);
        if (*emit) return cmd_emit(c, out);
        if (*simulate) return cmd_simulate(c, out);
        if (*check) return cmd_check(c, seed, samples);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    return 0;
}
