#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lbmc/kernel/boundary.hpp"
#include "lbmc/kernel/kernel.hpp"

namespace lbmc::sim {

using Cell = std::array<int, 3>;

struct FieldStorage {
    kernel::Field field;
    std::vector<double> data;
    std::array<std::int64_t, 3> stride{0, 0, 0};
    std::int64_t index_stride = 0;
};

/// Double-precision fields plus one integer flag field on a box with a
/// ghost layer of width one. Coordinates are raw array coordinates; the
/// interior is [1, n-2] in every spatial dimension. Accesses in periodic
/// dimensions wrap at the ghost layer, so periodic ghosts never hold state.
class Grid {
public:
    Grid(int dims, std::array<int, 3> interior, std::array<bool, 3> periodic);

    int dims() const { return dims_; }
    const std::array<int, 3>& shape() const { return shape_; }
    std::array<int, 3> interior() const;
    const std::array<bool, 3>& periodic() const { return periodic_; }
    std::size_t cell_count() const;

    void add_field(const kernel::Field& f);
    bool has_field(const std::string& name) const { return fields_.count(name) > 0; }
    FieldStorage& storage(const std::string& name);
    const FieldStorage& storage(const std::string& name) const;
    void swap_data(const std::string& a, const std::string& b);

    kernel::FlagField& flags() { return flags_; }
    const kernel::FlagField& flags() const { return flags_; }

    int wrap(int dim, int coord) const;
    Cell wrap(Cell c) const;
    std::size_t index(const std::string& name, Cell c, int q) const;
    double& at(const std::string& name, Cell c, int q) { return storage(name).data[index(name, c, q)]; }
    double at(const std::string& name, Cell c, int q) const { return storage(name).data[index(name, c, q)]; }

    /// Copies periodic images into the ghost layer, for code that addresses
    /// the raw arrays without wrapping (emitted kernels).
    void refresh_ghosts(const std::string& name);

    /// Calls fn for every interior cell, dimension 0 fastest.
    template <class Fn>
    void for_each_interior(Fn&& fn) const {
        const int z1 = dims_ == 3 ? shape_[2] - 1 : 1;
        const int z0 = dims_ == 3 ? 1 : 0;
        for (int z = z0; z < z1; ++z)
            for (int y = 1; y < shape_[1] - 1; ++y)
                for (int x = 1; x < shape_[0] - 1; ++x) fn(Cell{x, y, z});
    }

private:
    int dims_;
    std::array<int, 3> shape_;
    std::array<bool, 3> periodic_;
    std::map<std::string, FieldStorage> fields_;
    kernel::FlagField flags_;
};

}  // namespace lbmc::sim
