#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lbmc/kernel/boundary.hpp"
#include "lbmc/kernel/kernel.hpp"
#include "lbmc/methods/method.hpp"
#include "lbmc/sim/grid.hpp"
#include "lbmc/sim/interpreter.hpp"

namespace lbmc::sim {

enum class Streaming { TwoArrayPull, TwoArrayPush, AA, EsoTwist };

std::string streaming_name(Streaming s);
Streaming parse_streaming(const std::string& name);

struct SimulationSetup {
    methods::CollisionRule rule;
    /// Equilibrium populations in rho and u_i, used for initialization.
    std::vector<sym::Expr> equilibrium;
    std::array<int, 3> size{16, 16, 1};
    std::array<bool, 3> periodic{true, true, true};
    Streaming streaming = Streaming::TwoArrayPull;
    kernel::BoundaryMode boundary_mode = kernel::BoundaryMode::FullFieldFlag;
    std::vector<kernel::BoundarySpec> boundaries;
    /// Inner-loop split with this block length; 0 keeps one loop.
    int split_block = 0;
    kernel::Layout layout = kernel::Layout::SoA;
    /// Relaxation rates and boundary parameters.
    sym::Bindings params;
};

/// Kernels of one configuration: the pattern cycle of the streaming scheme
/// and, per pattern, the boundary sweeps (in declared order) and the
/// collision kernel.
struct KernelSet {
    std::vector<kernel::Pattern> cycle;
    std::map<kernel::Pattern, std::vector<kernel::Kernel>> boundaries;
    std::map<kernel::Pattern, kernel::Kernel> collide;
};

KernelSet lower_kernels(const SimulationSetup& setup, const std::string& name = "lbm");

struct Macroscopic {
    double rho = 0.0;
    std::array<double, 3> u{0.0, 0.0, 0.0};
};

/// Runs the lowered kernels of one collision rule through the interpreter.
///
/// The state between steps is described by the canonical populations: the
/// post-collision value of every population of every interior cell, stored
/// wherever the last kernel put it. Boundary sweeps run at the start of each
/// step and fill the slots the next kernel reads from wall links.
class Simulation {
public:
    explicit Simulation(SimulationSetup setup);

    const SimulationSetup& setup() const { return setup_; }
    const lattice::Stencil& stencil() const { return setup_.rule.stencil; }
    Grid& grid() { return grid_; }
    const Grid& grid() const { return grid_; }
    /// Flag field; mark walls with boundary flag ids before the first step.
    kernel::FlagField& flags();

    long time() const { return time_; }
    /// The kernel that the next step runs.
    kernel::Pattern next_pattern() const;
    /// Lowered kernels of every pattern this configuration uses, boundary
    /// sweeps included.
    std::vector<kernel::Kernel> kernels() const;

    /// Sets every interior cell to the equilibrium of the given state.
    void initialize(const std::function<Macroscopic(const Cell&)>& state);
    /// Interior cells with dimension 0 fastest, q values per cell.
    void set_populations(const std::vector<double>& p);
    std::vector<double> populations() const;

    void step();
    void run(long steps);

    Macroscopic macroscopic(const Cell& c) const;
    bool is_fluid(const Cell& c) const;
    double mass() const;
    std::array<double, 3> momentum() const;
    double kinetic_energy() const;
    /// Velocity of every interior cell (zero in walls), dimension 0 fastest.
    std::vector<std::array<double, 3>> velocity_field() const;

private:
    struct Stage {
        std::vector<std::unique_ptr<CompiledKernel>> boundaries;
        std::unique_ptr<CompiledKernel> collide;
    };

    const std::string& state_field() const { return in_place_ ? in_place_field_ : src_; }
    void build_index_lists();
    double population(const Cell& c, int q, kernel::Pattern last) const;

    SimulationSetup setup_;
    Grid grid_;
    bool in_place_ = false;
    std::string src_ = "src", dst_ = "dst", in_place_field_ = "pdfs";
    std::map<kernel::Pattern, Stage> stages_;
    std::vector<kernel::Pattern> cycle_;
    std::vector<kernel::IndexList> index_lists_;
    bool lists_ready_ = false;
    long time_ = 0;
};

}  // namespace lbmc::sim
