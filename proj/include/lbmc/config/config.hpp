#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lbmc/kernel/boundary.hpp"
#include "lbmc/methods/method.hpp"
#include "lbmc/sim/scenario.hpp"
#include "lbmc/simplify/simplify.hpp"

namespace lbmc::config {

struct ScenarioSection {
    sim::ScenarioKind kind = sim::ScenarioKind::TaylorGreen2D;
    std::array<int, 3> size{32, 32, 1};
    long steps = 1000;
    long sample_every = 100;
    double velocity = 0.05;
    bool entropy = false;
    long snapshot_every = 0;
};

/// A validated configuration file. See schema/lbmc-config.schema.json.
struct Config {
    methods::MethodSpec method;
    /// Values of numeric rates, rate-model constants and "parameters".
    sym::Bindings params;
    /// Numeric shear relaxation rate, when the configuration fixes one.
    std::optional<double> shear_rate;
    /// Empty selects the strategy with the fewest FLOPs.
    std::optional<simplify::Strategy> strategy;
    /// "pull", "push", "aa", "esotwist" or "collide_only".
    std::string streaming = "pull";
    kernel::Layout layout = kernel::Layout::SoA;
    int split_block = 0;
    kernel::BoundaryMode boundary_mode = kernel::BoundaryMode::FullFieldFlag;
    std::string kernel_name = "lbm";
    std::vector<sim::FaceAssignment> faces;
    std::optional<ScenarioSection> scenario;
};

/// Parses and validates JSON text. Errors are ConfigError messages that
/// start with the offending key path.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

methods::CollisionRule assemble(const Config& c);
/// Simplification with the configured strategy, or all three strategies
/// when none is configured (the result then holds the best one).
simplify::Simplified simplify_rule(const Config& c);

/// Kernels emitted for the configuration: collision kernels of the
/// streaming cycle plus boundary sweeps for the configured faces.
std::vector<kernel::Kernel> kernels(const Config& c, const methods::CollisionRule& rule);

sim::ScenarioConfig scenario_config(const Config& c, const methods::CollisionRule& rule);

}  // namespace lbmc::config
