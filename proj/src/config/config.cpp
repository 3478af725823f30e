#include "lbmc/config/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lbmc/error.hpp"
#include "lbmc/methods/entropic.hpp"

namespace lbmc::config {

using json = nlohmann::json;
using sym::Expr;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void allow_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) fail(join(path, k), "unknown key");
}

const json* find(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

std::string get_string(const json& j, const std::string& key, const std::string& path, const std::string& dflt,
                       bool required = false) {
    const json* v = find(j, key);
    if (!v) {
        if (required) fail(join(path, key), "missing required key");
        return dflt;
    }
    if (!v->is_string()) fail(join(path, key), "expected a string");
    return v->get<std::string>();
}

double get_number(const json& j, const std::string& key, const std::string& path, double dflt) {
    const json* v = find(j, key);
    if (!v) return dflt;
    if (!v->is_number()) fail(join(path, key), "expected a number");
    return v->get<double>();
}

long get_integer(const json& j, const std::string& key, const std::string& path, long dflt, long min) {
    const json* v = find(j, key);
    if (!v) return dflt;
    if (!v->is_number_integer()) fail(join(path, key), "expected an integer");
    long x = v->get<long>();
    if (x < min) fail(join(path, key), "must be at least " + std::to_string(min));
    return x;
}

bool get_bool(const json& j, const std::string& key, const std::string& path, bool dflt) {
    const json* v = find(j, key);
    if (!v) return dflt;
    if (!v->is_boolean()) fail(join(path, key), "expected true or false");
    return v->get<bool>();
}

bool identifier(const std::string& n) {
    if (n.empty() || n[0] == '_' || std::isdigit(static_cast<unsigned char>(n[0]))) return false;
    for (char ch : n)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
    return true;
}

template <class F>
auto rethrow_at(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        fail(path, e.what());
    }
}

struct RateModel {
    enum Kind { None, Smagorinsky, Kbc } kind = None;
    Expr symbol;
    std::string path;
};

class Resolver {
public:
    Resolver(Config& c) : c_(c) {}

    /// Symbol for one rate entry; numbers bind `dflt` to the value.
    Expr rate(const json& v, const std::string& dflt, const std::string& path, bool shear, RateModel& model) {
        if (v.is_number()) {
            double x = v.get<double>();
            if (!(x > 0.0 && x < 2.0)) fail(path, "relaxation rate must lie in (0, 2)");
            c_.params[dflt] = x;
            if (shear) c_.shear_rate = x;
            return sym::sym(dflt);
        }
        if (v.is_string()) {
            std::string n = v.get<std::string>();
            if (!identifier(n)) fail(path, "'" + n + "' is not a valid symbol name");
            if (shear) shear_symbol_ = n;
            return sym::sym(n);
        }
        if (v.is_object() && v.size() == 1 && v.contains("smagorinsky")) {
            if (!shear) fail(path, "the smagorinsky model applies to the shear rate only");
            const std::string p = join(path, "smagorinsky");
            const json& m = v.at("smagorinsky");
            allow_keys(m, p, {"C_S", "nu_0"});
            for (const char* k : {"C_S", "nu_0"}) {
                if (!m.contains(k)) fail(join(p, k), "missing required key");
                double x = get_number(m, k, p, 0.0);
                if (!(x > 0.0)) fail(join(p, k), "must be positive");
                c_.params[k] = x;
            }
            model = {RateModel::Smagorinsky, sym::sym(dflt), path};
            return sym::sym(dflt);
        }
        if (v.is_object() && v.size() == 1 && v.contains("kbc")) {
            const std::string p = join(path, "kbc");
            const json& m = v.at("kbc");
            allow_keys(m, p, {"omega_s", "partition"});
            if (get_string(m, "partition", p, "example") != "example")
                fail(join(p, "partition"), "only the 'example' partition is available");
            if (!m.contains("omega_s")) fail(join(p, "omega_s"), "missing required key");
            RateModel inner;
            Expr ws = rate(m.at("omega_s"), "omega_s", join(p, "omega_s"), true, inner);
            model = {RateModel::Kbc, ws, path};
            return ws;
        }
        fail(path, "expected a number, a symbol name or a rate model object");
    }

    void finish_shear() {
        if (shear_symbol_) {
            auto it = c_.params.find(*shear_symbol_);
            if (it != c_.params.end()) c_.shear_rate = it->second;
        }
    }

private:
    Config& c_;
    std::optional<std::string> shear_symbol_;
};

void parse_method(const json& j, Config& c) {
    const std::string sname = get_string(j, "stencil", "", "", true);
    const lattice::Stencil s = rethrow_at("stencil", [&] { return lattice::builtin(sname); });

    equilibria::EquilibriumSpec eq;
    if (const json* e = find(j, "equilibrium")) {
        allow_keys(*e, "equilibrium", {"compressible", "order"});
        eq.compressible = get_bool(*e, "compressible", "equilibrium", true);
        long order = get_integer(*e, "order", "equilibrium", 2, 1);
        if (order > 3) fail("equilibrium.order", "must be 1, 2 or 3");
        eq.order = static_cast<int>(order);
    }

    const std::string kind = get_string(j, "method", "", "", true);
    if (kind != "srt" && kind != "trt" && kind != "mrt" && kind != "cumulant")
        fail("method", "expected one of srt, trt, mrt, cumulant");
    if (find(j, "weighted") && kind != "mrt") fail("weighted", "only meaningful for mrt");
    const bool weighted = get_bool(j, "weighted", "", true);

    const json* rates = find(j, "rates");
    if (!rates) fail("rates", "missing required key");
    if (!rates->is_object()) fail("rates", "expected an object");

    Resolver res(c);
    RateModel model;
    auto need = [&](const std::string& key) -> const json& {
        if (!rates->contains(key)) fail(join("rates", key), "missing required key");
        return rates->at(key);
    };

    if (kind == "srt") {
        allow_keys(*rates, "rates", {"omega"});
        Expr w = res.rate(need("omega"), "omega", "rates.omega", true, model);
        if (model.kind == RateModel::Kbc)
            c.method = rethrow_at("rates.omega.kbc",
                                  [&] { return methods::create_kbc(s, w, methods::example_kbc_partition(), eq); });
        else
            c.method = rethrow_at("rates", [&] { return methods::create_srt(s, w, eq); });
    } else if (kind == "trt") {
        allow_keys(*rates, "rates", {"omega_even", "omega_odd"});
        Expr we = res.rate(need("omega_even"), "omega_e", "rates.omega_even", true, model);
        if (model.kind == RateModel::Kbc) fail(model.path, "the kbc model applies to srt only");
        RateModel none;
        Expr wo = res.rate(need("omega_odd"), "omega_o", "rates.omega_odd", false, none);
        c.method = rethrow_at("rates", [&] { return methods::create_trt(s, we, wo, eq); });
    } else {
        methods::RateMap rm;
        for (const auto& [k, v] : rates->items()) {
            bool numeric = !k.empty() && k.find_first_not_of("0123456789") == std::string::npos;
            if (k != "shear" && k != "bulk" && !numeric) fail(join("rates", k), "unknown key");
            RateModel none;
            rm[k] = res.rate(v, "omega_" + k, join("rates", k), k == "shear", k == "shear" ? model : none);
        }
        if (model.kind == RateModel::Kbc) fail(model.path, "the kbc model applies to srt only");
        c.method = rethrow_at("rates", [&] {
            return kind == "mrt" ? methods::create_mrt(s, rm, weighted, eq) : methods::create_cumulant(s, rm, eq);
        });
    }
    if (model.kind == RateModel::Smagorinsky) {
        c.method.rate_definitions.push_back(
            {model.symbol, methods::smagorinsky_rate(sym::sym("nu_0"), sym::sym("C_S"), c.method)});
        c.shear_rate.reset();
    }

    if (const json* p = find(j, "parameters")) {
        if (!p->is_object()) fail("parameters", "expected an object");
        for (const auto& [k, v] : p->items()) {
            if (!identifier(k)) fail(join("parameters", k), "not a valid symbol name");
            if (!v.is_number()) fail(join("parameters", k), "expected a number");
            c.params[k] = v.get<double>();
        }
    }
    res.finish_shear();
}

void parse_kernel(const json& j, Config& c) {
    c.streaming = get_string(j, "streaming", "", "pull");
    static const std::set<std::string> patterns{"pull", "push", "aa", "esotwist", "collide_only"};
    if (!patterns.count(c.streaming)) fail("streaming", "expected one of pull, push, aa, esotwist, collide_only");
    if (const json* k = find(j, "kernel")) {
        allow_keys(*k, "kernel", {"layout", "split_block", "boundary_mode", "name"});
        std::string layout = get_string(*k, "layout", "kernel", "soa");
        if (layout != "soa" && layout != "aos") fail("kernel.layout", "expected soa or aos");
        c.layout = layout == "soa" ? kernel::Layout::SoA : kernel::Layout::AoS;
        c.split_block = static_cast<int>(get_integer(*k, "split_block", "kernel", 0, 0));
        c.boundary_mode = rethrow_at("kernel.boundary_mode", [&] {
            return kernel::parse_boundary_mode(get_string(*k, "boundary_mode", "kernel", "full_field_flag"));
        });
        c.kernel_name = get_string(*k, "name", "kernel", "lbm");
        if (!identifier(c.kernel_name)) fail("kernel.name", "not a valid C identifier");
    }
}

void parse_boundaries(const json& j, Config& c) {
    const json* b = find(j, "boundaries");
    if (!b) return;
    if (!b->is_array()) fail("boundaries", "expected an array");
    const int d = c.method.stencil.d;
    for (std::size_t i = 0; i < b->size(); ++i) {
        const std::string p = "boundaries[" + std::to_string(i) + "]";
        const json& e = (*b)[i];
        allow_keys(e, p, {"face", "kind", "velocity"});
        sim::FaceAssignment f;
        f.face = get_string(e, "face", p, "", true);
        std::string kind = get_string(e, "kind", p, "", true);
        if (kind == "no_slip") {
            f.kind = sim::WallKind::NoSlip;
            if (e.contains("velocity")) fail(join(p, "velocity"), "no-slip walls do not move");
        } else if (kind == "ubb") {
            f.kind = sim::WallKind::Ubb;
            const json* v = find(e, "velocity");
            if (!v) fail(join(p, "velocity"), "missing required key");
            if (!v->is_array() || v->size() != static_cast<std::size_t>(d))
                fail(join(p, "velocity"), "expected " + std::to_string(d) + " numbers");
            for (int k = 0; k < d; ++k) {
                const json& x = (*v)[static_cast<std::size_t>(k)];
                if (!x.is_number()) fail(join(p, "velocity") + "[" + std::to_string(k) + "]", "expected a number");
                f.velocity[static_cast<std::size_t>(k)] = x.get<double>();
            }
        } else {
            fail(join(p, "kind"), "expected no_slip or ubb");
        }
        c.faces.push_back(f);
    }
}

void parse_scenario_section(const json& j, Config& c) {
    const json* s = find(j, "scenario");
    if (!s) return;
    const std::string p = "scenario";
    allow_keys(*s, p, {"kind", "size", "steps", "sample_every", "velocity", "entropy", "snapshot_every"});
    ScenarioSection sc;
    sc.kind = rethrow_at(join(p, "kind"), [&] { return sim::parse_scenario(get_string(*s, "kind", p, "", true)); });
    const int d = c.method.stencil.d;
    if (const json* sz = find(*s, "size")) {
        if (!sz->is_array() || sz->size() != static_cast<std::size_t>(d))
            fail(join(p, "size"), "expected " + std::to_string(d) + " positive integers");
        for (int k = 0; k < d; ++k) {
            const json& x = (*sz)[static_cast<std::size_t>(k)];
            if (!x.is_number_integer() || x.get<long>() < 1)
                fail(join(p, "size") + "[" + std::to_string(k) + "]", "expected a positive integer");
            sc.size[static_cast<std::size_t>(k)] = x.get<int>();
        }
    }
    sc.steps = get_integer(*s, "steps", p, sc.steps, 0);
    sc.sample_every = get_integer(*s, "sample_every", p, sc.sample_every, 1);
    sc.velocity = get_number(*s, "velocity", p, sc.velocity);
    sc.entropy = get_bool(*s, "entropy", p, false);
    sc.snapshot_every = get_integer(*s, "snapshot_every", p, 0, 0);
    c.scenario = sc;
}

}  // namespace

Config parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
    }
    allow_keys(j, "", {"stencil", "method", "weighted", "equilibrium", "rates", "parameters", "strategy", "streaming",
                       "kernel", "boundaries", "scenario"});
    Config c;
    parse_method(j, c);
    std::string st = get_string(j, "strategy", "", "best");
    if (st != "best") c.strategy = rethrow_at("strategy", [&] { return simplify::parse_strategy(st); });
    parse_kernel(j, c);
    parse_boundaries(j, c);
    parse_scenario_section(j, c);
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot read configuration file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

methods::CollisionRule assemble(const Config& c) { return methods::assemble_collision_rule(c.method); }

simplify::Simplified simplify_rule(const Config& c) {
    auto rule = assemble(c);
    return c.strategy ? simplify::run_strategy(rule, *c.strategy) : simplify::select_best(rule);
}

std::vector<kernel::Kernel> kernels(const Config& c, const methods::CollisionRule& rule) {
    const auto& s = rule.stencil;
    if (c.streaming == "collide_only") {
        if (!c.faces.empty()) throw ConfigError("boundaries: collide-only kernels have no boundary handling");
        kernel::Field pdf{"pdfs", s.d, s.q, c.layout, kernel::ScalarType::F64};
        kernel::LowerOptions opts;
        opts.name = c.kernel_name + "_collide_only";
        auto k = kernel::lower(rule, kernel::Pattern::CollideOnly, pdf, std::nullopt, opts);
        if (c.split_block > 0) k = kernel::split_inner_loop(k, s, kernel::default_buffered(rule), c.split_block);
        return {k};
    }
    sim::SimulationSetup su;
    su.rule = rule;
    su.streaming = sim::parse_streaming(c.streaming);
    su.boundary_mode = c.boundary_mode;
    su.split_block = c.split_block;
    su.layout = c.layout;
    sym::Bindings params = c.params;
    su.boundaries = sim::boundary_specs(c.faces, s.d, params);
    auto ks = sim::lower_kernels(su, c.kernel_name);
    std::vector<kernel::Kernel> out;
    for (auto p : ks.cycle) {
        for (const auto& b : ks.boundaries.at(p)) out.push_back(b);
        out.push_back(ks.collide.at(p));
    }
    return out;
}

sim::ScenarioConfig scenario_config(const Config& c, const methods::CollisionRule& rule) {
    if (!c.scenario) throw ConfigError("scenario: missing required section");
    if (c.streaming == "collide_only") throw ConfigError("streaming: simulations need a streaming pattern");
    const auto& s = *c.scenario;
    sim::ScenarioConfig sc;
    sc.kind = s.kind;
    sc.rule = rule;
    sc.equilibrium = methods::method_equilibrium(c.method);
    sc.params = c.params;
    sc.size = s.size;
    sc.streaming = sim::parse_streaming(c.streaming);
    sc.boundary_mode = c.boundary_mode;
    sc.split_block = c.split_block;
    sc.layout = c.layout;
    sc.faces = c.faces;
    sc.velocity = s.velocity;
    sc.steps = s.steps;
    sc.sample_every = s.sample_every;
    sc.shear_rate = c.shear_rate;
    sc.entropy = s.entropy;
    sc.snapshot_every = s.snapshot_every;
    return sc;
}

}  // namespace lbmc::config
