#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lbmc/methods/method.hpp"
#include "lbmc/sim/simulation.hpp"

namespace lbmc::sim {

enum class ScenarioKind { TaylorGreen2D, Couette, LidDrivenCavity, Periodic };

std::string scenario_name(ScenarioKind k);
ScenarioKind parse_scenario(const std::string& name);

enum class WallKind { NoSlip, Ubb };

/// One non-periodic face ("x-", "x+", "y-", ...) and the wall placed in its
/// ghost layer. Later assignments win on shared edges and corners.
struct FaceAssignment {
    std::string face;
    WallKind kind = WallKind::NoSlip;
    std::array<double, 3> velocity{0.0, 0.0, 0.0};
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::TaylorGreen2D;
    methods::CollisionRule rule;
    std::vector<sym::Expr> equilibrium;
    /// Numeric values of the rule's free parameters.
    sym::Bindings params;
    std::array<int, 3> size{32, 32, 1};
    Streaming streaming = Streaming::TwoArrayPull;
    kernel::BoundaryMode boundary_mode = kernel::BoundaryMode::FullFieldFlag;
    int split_block = 0;
    kernel::Layout layout = kernel::Layout::SoA;
    /// Empty means the scenario's default walls.
    std::vector<FaceAssignment> faces;
    /// Velocity scale: vortex amplitude, moving-wall or lid speed.
    double velocity = 0.05;
    /// Maximal number of steps; Couette stops earlier at steady state.
    long steps = 1000;
    long sample_every = 100;
    /// Shear relaxation rate used for the analytic viscosity.
    std::optional<double> shear_rate;
    bool entropy = false;
    long snapshot_every = 0;
};

struct Sample {
    long step = 0;
    double mass = 0.0;
    std::array<double, 3> momentum{0.0, 0.0, 0.0};
    double kinetic_energy = 0.0;
    std::optional<double> entropy;
};

struct Snapshot {
    long step = 0;
    std::array<int, 3> shape{1, 1, 1};
    int components = 2;
    std::vector<double> values;  // cells with dimension 0 fastest, components innermost
};

struct ScenarioResult {
    std::vector<Sample> samples;
    std::vector<Snapshot> snapshots;  // the final state is always included
    /// Scenario-specific figures, e.g. measured and expected viscosity.
    std::map<std::string, double> summary;
    bool converged = true;
};

/// Wall i gets flag id i + 1. Moving walls read their velocity components
/// from the parameters u_wall<id>_<k>, which are added to `params`.
std::vector<kernel::BoundarySpec> boundary_specs(const std::vector<FaceAssignment>& faces, int d,
                                                 sym::Bindings& params);

/// Default face assignments of a scenario.
std::vector<FaceAssignment> default_faces(const ScenarioConfig& c);
/// Builds the simulation of a scenario with walls marked and the initial
/// state loaded.
Simulation prepare(const ScenarioConfig& c);
ScenarioResult run_scenario(const ScenarioConfig& c);

/// -sum f ln(f / w) over the canonical populations of fluid cells.
double discrete_entropy(const Simulation& s);

/// Least-squares slope of ln(kinetic energy) over time for the samples with
/// step >= from.
double energy_decay_rate(const std::vector<Sample>& samples, long from);

void write_samples(std::ostream& os, const std::vector<Sample>& samples);
void write_snapshot(std::ostream& os, const Snapshot& s);
Snapshot read_snapshot(std::istream& is);

}  // namespace lbmc::sim
