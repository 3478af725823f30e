#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lbmc/kernel/kernel.hpp"

namespace lbmc::kernel {

enum class BoundaryMode { FullFieldFlag, IndexList, CompiledIn };

std::string boundary_mode_name(BoundaryMode m);
BoundaryMode parse_boundary_mode(const std::string& name);

BoundarySpec no_slip(int flag_id);
/// Moving wall with reference density 1: f_out - 2 w (c . u_wall) / cs2.
BoundarySpec ubb(int flag_id, const std::vector<Expr>& wall_velocity, std::vector<std::string> payload = {});
BoundarySpec custom_boundary(int flag_id, const Expr& rule, std::vector<std::string> payload = {});

/// Value for link direction d (fluid towards wall) given the outgoing value.
Expr link_value(const BoundarySpec& bc, const lattice::Stencil& s, int d, const Expr& f_out);

inline constexpr std::int32_t kFluid = 0;

/// Cell flags including the ghost layer. Periodic dimensions wrap at the
/// ghost layer, like field accesses do.
struct FlagField {
    int dims = 2;
    std::array<int, 3> shape{1, 1, 1};
    std::array<bool, 3> periodic{false, false, false};
    std::vector<std::int32_t> data;

    FlagField() = default;
    FlagField(int dims, std::array<int, 3> shape, std::array<bool, 3> periodic);
    std::size_t linear(std::array<int, 3> x) const;
    std::int32_t& at(std::array<int, 3> x) { return data[linear(x)]; }
    std::int32_t at(std::array<int, 3> x) const { return data[linear(x)]; }
    /// Applies periodic wrapping to a coordinate in [0, n-1].
    std::array<int, 3> wrap(std::array<int, 3> x) const;
};

struct IndexList {
    int dims = 2;
    std::vector<std::array<int, 3>> cells;
    std::vector<int> directions;
    /// One column per payload symbol, one row per entry.
    std::vector<std::vector<double>> payload;

    std::size_t size() const { return cells.size(); }
};

/// One entry per (interior fluid cell, direction) whose neighbor carries
/// `flag_id`, ordered cell-major with dimension 0 fastest, then by
/// direction.
IndexList build_index_list(const FlagField& flags, int flag_id, const lattice::Stencil& s);

/// Boundary sweep that runs right before a kernel of pattern `next`. It
/// reads the post-collision values left by the preceding kernel and writes
/// the slots `next` will read. COMPILED_IN boundaries go through
/// LowerOptions::compiled_in instead.
Kernel lower_boundary(const BoundarySpec& bc, const lattice::Stencil& s, Pattern next, BoundaryMode mode,
                      const Field& pdf, const Field& flags, const std::string& name = "boundary");

}  // namespace lbmc::kernel
