#include "lbmc/sim/simulation.hpp"

#include <cmath>

#include "lbmc/equilibria/equilibrium.hpp"
#include "lbmc/error.hpp"

namespace lbmc::sim {

using kernel::Pattern;

std::string streaming_name(Streaming s) {
    switch (s) {
        case Streaming::TwoArrayPull: return "pull";
        case Streaming::TwoArrayPush: return "push";
        case Streaming::AA: return "aa";
        case Streaming::EsoTwist: return "esotwist";
    }
    return "";
}

Streaming parse_streaming(const std::string& name) {
    for (Streaming s : {Streaming::TwoArrayPull, Streaming::TwoArrayPush, Streaming::AA, Streaming::EsoTwist})
        if (streaming_name(s) == name) return s;
    throw ConfigError("unknown streaming pattern '" + name + "'");
}

namespace {

std::vector<Pattern> pattern_cycle(Streaming s) {
    switch (s) {
        case Streaming::TwoArrayPull: return {Pattern::Pull};
        case Streaming::TwoArrayPush: return {Pattern::Push};
        case Streaming::AA: return {Pattern::AaEven, Pattern::AaOdd};
        case Streaming::EsoTwist: return {Pattern::EsoEven, Pattern::EsoOdd};
    }
    return {};
}

std::array<int, 3> grid_interior(const SimulationSetup& s) {
    std::array<int, 3> n = s.size;
    for (int i = s.rule.stencil.d; i < 3; ++i) n[static_cast<std::size_t>(i)] = 1;
    return n;
}

}  // namespace

KernelSet lower_kernels(const SimulationSetup& setup, const std::string& name) {
    const auto& s = setup.rule.stencil;
    KernelSet ks;
    ks.cycle = pattern_cycle(setup.streaming);
    const bool in_place = kernel::in_place(ks.cycle.front());
    kernel::Field pdf{in_place ? "pdfs" : "src", s.d, s.q, setup.layout, kernel::ScalarType::F64};
    kernel::Field flags{"flags", s.d, 1, kernel::Layout::SoA, kernel::ScalarType::I32};
    std::optional<kernel::Field> dst;
    if (!in_place) {
        dst = pdf;
        dst->name = "dst";
    }
    const bool compiled_in = setup.boundary_mode == kernel::BoundaryMode::CompiledIn;
    for (Pattern p : ks.cycle) {
        kernel::LowerOptions opts;
        opts.name = name + "_" + kernel::pattern_name(p);
        if (compiled_in && !setup.boundaries.empty()) {
            opts.compiled_in = setup.boundaries;
            opts.flags = flags;
        }
        kernel::Kernel k = kernel::lower(setup.rule, p, pdf, dst, opts);
        if (setup.split_block > 0)
            k = kernel::split_inner_loop(k, s, kernel::default_buffered(setup.rule), setup.split_block);
        ks.collide.emplace(p, std::move(k));
        auto& list = ks.boundaries[p];
        if (compiled_in) continue;
        for (std::size_t b = 0; b < setup.boundaries.size(); ++b)
            list.push_back(kernel::lower_boundary(setup.boundaries[b], s, p, setup.boundary_mode, pdf, flags,
                                                  "boundary" + std::to_string(b) + "_" + kernel::pattern_name(p)));
    }
    return ks;
}

Simulation::Simulation(SimulationSetup setup)
    : setup_(std::move(setup)), grid_(setup_.rule.stencil.d, grid_interior(setup_), setup_.periodic) {
    const auto& s = setup_.rule.stencil;
    if (setup_.rule.outputs.size() != static_cast<std::size_t>(s.q))
        throw ConfigError("collision rule has the wrong number of outputs");
    if (setup_.equilibrium.size() != static_cast<std::size_t>(s.q))
        throw ConfigError("equilibrium must list one population per direction");
    if (setup_.split_block < 0) throw ConfigError("split block must be non-negative");

    cycle_ = pattern_cycle(setup_.streaming);
    in_place_ = kernel::in_place(cycle_.front());
    KernelSet ks = lower_kernels(setup_);
    for (const auto& f : ks.collide.at(cycle_.front()).fields)
        if (f.type == kernel::ScalarType::F64) grid_.add_field(f);
    for (Pattern p : cycle_) {
        Stage st;
        st.collide = std::make_unique<CompiledKernel>(ks.collide.at(p), grid_);
        for (const auto& bk : ks.boundaries[p]) st.boundaries.push_back(std::make_unique<CompiledKernel>(bk, grid_));
        stages_[p] = std::move(st);
    }
}

kernel::FlagField& Simulation::flags() {
    lists_ready_ = false;
    return grid_.flags();
}

Pattern Simulation::next_pattern() const { return cycle_[static_cast<std::size_t>(time_ % static_cast<long>(cycle_.size()))]; }

std::vector<kernel::Kernel> Simulation::kernels() const {
    std::vector<kernel::Kernel> out;
    for (Pattern p : cycle_) {
        const auto& st = stages_.at(p);
        for (const auto& b : st.boundaries) out.push_back(b->source());
        out.push_back(st.collide->source());
    }
    return out;
}

double Simulation::population(const Cell& c, int q, Pattern last) const {
    auto slot = kernel::write_slot(stencil(), last, q);
    Cell x{c[0] + slot.offset[0], c[1] + slot.offset[1], c[2] + slot.offset[2]};
    return grid_.at(state_field(), x, slot.index);
}

void Simulation::initialize(const std::function<Macroscopic(const Cell&)>& state) {
    const auto& s = stencil();
    std::vector<double> p;
    grid_.for_each_interior([&](const Cell& c) {
        Macroscopic m = state(c);
        sym::Bindings b{{equilibria::rho().name(), m.rho}};
        for (int i = 0; i < s.d; ++i) b[equilibria::velocity(i).name()] = m.u[static_cast<std::size_t>(i)];
        for (const auto& e : setup_.equilibrium) p.push_back(sym::eval_f64(e, b));
    });
    set_populations(p);
}

void Simulation::set_populations(const std::vector<double>& p) {
    const auto& s = stencil();
    const auto n = grid_.interior();
    if (p.size() != static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(n[2]) *
                        static_cast<std::size_t>(s.q))
        throw ConfigError("population vector has the wrong size");
    const Pattern last = kernel::predecessor(next_pattern());
    std::size_t i = 0;
    grid_.for_each_interior([&](const Cell& c) {
        for (int q = 0; q < s.q; ++q) {
            auto slot = kernel::write_slot(s, last, q);
            Cell x{c[0] + slot.offset[0], c[1] + slot.offset[1], c[2] + slot.offset[2]};
            grid_.at(state_field(), x, slot.index) = p[i++];
        }
    });
}

std::vector<double> Simulation::populations() const {
    const Pattern last = kernel::predecessor(next_pattern());
    std::vector<double> p;
    grid_.for_each_interior([&](const Cell& c) {
        for (int q = 0; q < stencil().q; ++q) p.push_back(population(c, q, last));
    });
    return p;
}

void Simulation::build_index_lists() {
    index_lists_.clear();
    if (setup_.boundary_mode == kernel::BoundaryMode::IndexList) {
        for (const auto& bc : setup_.boundaries) {
            auto list = kernel::build_index_list(grid_.flags(), bc.flag_id, stencil());
            for (const auto& name : bc.payload) {
                auto it = setup_.params.find(name);
                if (it == setup_.params.end()) throw ConfigError("missing value for boundary payload '" + name + "'");
                list.payload.emplace_back(list.size(), it->second);
            }
            index_lists_.push_back(std::move(list));
        }
    }
    lists_ready_ = true;
}

void Simulation::step() {
    if (!lists_ready_) build_index_lists();
    const Pattern p = next_pattern();
    const auto& st = stages_.at(p);
    for (std::size_t b = 0; b < st.boundaries.size(); ++b)
        st.boundaries[b]->run(grid_, setup_.params, index_lists_.empty() ? nullptr : &index_lists_[b]);
    st.collide->run(grid_, setup_.params);
    if (!in_place_) grid_.swap_data(src_, dst_);
    ++time_;
    for (double v : grid_.storage(state_field()).data)
        if (!std::isfinite(v)) throw RuntimeFailure("non-finite population after step " + std::to_string(time_));
}

void Simulation::run(long steps) {
    for (long i = 0; i < steps; ++i) step();
}

bool Simulation::is_fluid(const Cell& c) const { return grid_.flags().at(c) == kernel::kFluid; }

Macroscopic Simulation::macroscopic(const Cell& c) const {
    const auto& s = stencil();
    const Pattern last = kernel::predecessor(next_pattern());
    Macroscopic m;
    for (int q = 0; q < s.q; ++q) {
        double f = population(c, q, last);
        m.rho += f;
        for (int i = 0; i < s.d; ++i)
            m.u[static_cast<std::size_t>(i)] += s.c[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)] * f;
    }
    if (setup_.rule.compressible)
        for (auto& v : m.u) v /= m.rho;
    return m;
}

double Simulation::mass() const {
    double m = 0.0;
    grid_.for_each_interior([&](const Cell& c) {
        if (is_fluid(c)) m += macroscopic(c).rho;
    });
    return m;
}

std::array<double, 3> Simulation::momentum() const {
    std::array<double, 3> j{0.0, 0.0, 0.0};
    grid_.for_each_interior([&](const Cell& c) {
        if (!is_fluid(c)) return;
        auto m = macroscopic(c);
        const double r = setup_.rule.compressible ? m.rho : 1.0;
        for (int i = 0; i < 3; ++i) j[static_cast<std::size_t>(i)] += r * m.u[static_cast<std::size_t>(i)];
    });
    return j;
}

double Simulation::kinetic_energy() const {
    double e = 0.0;
    grid_.for_each_interior([&](const Cell& c) {
        if (!is_fluid(c)) return;
        auto m = macroscopic(c);
        const double r = setup_.rule.compressible ? m.rho : 1.0;
        e += 0.5 * r * (m.u[0] * m.u[0] + m.u[1] * m.u[1] + m.u[2] * m.u[2]);
    });
    return e;
}

std::vector<std::array<double, 3>> Simulation::velocity_field() const {
    std::vector<std::array<double, 3>> v;
    grid_.for_each_interior([&](const Cell& c) {
        v.push_back(is_fluid(c) ? macroscopic(c).u : std::array<double, 3>{0.0, 0.0, 0.0});
    });
    return v;
}

}  // namespace lbmc::sim
