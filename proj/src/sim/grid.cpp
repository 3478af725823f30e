#include "lbmc/sim/grid.hpp"

#include "lbmc/error.hpp"

namespace lbmc::sim {

Grid::Grid(int dims, std::array<int, 3> interior, std::array<bool, 3> periodic) : dims_(dims), periodic_(periodic) {
    if (dims != 2 && dims != 3) throw ConfigError("grids are two- or three-dimensional");
    for (int i = 0; i < 3; ++i) {
        auto k = static_cast<std::size_t>(i);
        if (i < dims) {
            if (interior[k] < 1) throw ConfigError("grid extent must be positive");
            shape_[k] = interior[k] + 2;
        } else {
            shape_[k] = 1;
            periodic_[k] = false;
        }
    }
    flags_ = kernel::FlagField(dims, shape_, periodic_);
}

std::array<int, 3> Grid::interior() const {
    std::array<int, 3> n{1, 1, 1};
    for (int i = 0; i < dims_; ++i) n[static_cast<std::size_t>(i)] = shape_[static_cast<std::size_t>(i)] - 2;
    return n;
}

std::size_t Grid::cell_count() const {
    return static_cast<std::size_t>(shape_[0]) * static_cast<std::size_t>(shape_[1]) *
           static_cast<std::size_t>(shape_[2]);
}

void Grid::add_field(const kernel::Field& f) {
    if (f.dims != dims_) throw ConfigError("field '" + f.name + "' has the wrong dimension for this grid");
    if (f.type != kernel::ScalarType::F64) throw ConfigError("only double fields are stored on the grid");
    FieldStorage s;
    s.field = f;
    const auto cells = static_cast<std::int64_t>(cell_count());
    const std::int64_t q = f.index_size;
    if (f.layout == kernel::Layout::SoA) {
        s.stride = {1, shape_[0], static_cast<std::int64_t>(shape_[0]) * shape_[1]};
        s.index_stride = cells;
    } else {
        s.stride = {q, q * shape_[0], q * shape_[0] * shape_[1]};
        s.index_stride = 1;
    }
    s.data.assign(static_cast<std::size_t>(cells * q), 0.0);
    fields_[f.name] = std::move(s);
}

FieldStorage& Grid::storage(const std::string& name) {
    auto it = fields_.find(name);
    if (it == fields_.end()) throw ConfigError("grid has no field '" + name + "'");
    return it->second;
}

const FieldStorage& Grid::storage(const std::string& name) const {
    auto it = fields_.find(name);
    if (it == fields_.end()) throw ConfigError("grid has no field '" + name + "'");
    return it->second;
}

void Grid::swap_data(const std::string& a, const std::string& b) {
    auto& fa = storage(a);
    auto& fb = storage(b);
    if (fa.data.size() != fb.data.size() || fa.field.layout != fb.field.layout)
        throw ConfigError("cannot swap fields of different shape");
    fa.data.swap(fb.data);
}

int Grid::wrap(int dim, int coord) const {
    auto k = static_cast<std::size_t>(dim);
    if (!periodic_[k]) return coord;
    int n = shape_[k] - 2;
    if (coord < 1) return coord + n;
    if (coord > n) return coord - n;
    return coord;
}

Cell Grid::wrap(Cell c) const {
    for (int i = 0; i < dims_; ++i) c[static_cast<std::size_t>(i)] = wrap(i, c[static_cast<std::size_t>(i)]);
    return c;
}

std::size_t Grid::index(const std::string& name, Cell c, int q) const {
    const auto& s = storage(name);
    c = wrap(c);
    std::int64_t i = q * s.index_stride;
    for (int d = 0; d < dims_; ++d) {
        auto k = static_cast<std::size_t>(d);
        if (c[k] < 0 || c[k] >= shape_[k]) throw ConfigError("cell outside of the grid");
        i += c[k] * s.stride[k];
    }
    return static_cast<std::size_t>(i);
}

void Grid::refresh_ghosts(const std::string& name) {
    auto& s = storage(name);
    const int z1 = dims_ == 3 ? shape_[2] : 1;
    for (int z = 0; z < z1; ++z) {
        for (int y = 0; y < shape_[1]; ++y) {
            for (int x = 0; x < shape_[0]; ++x) {
                Cell c{x, y, z};
                Cell w = wrap(c);
                if (w == c) continue;
                bool inside = true;
                for (int d = 0; d < dims_; ++d) {
                    int v = w[static_cast<std::size_t>(d)];
                    inside = inside && v >= 0 && v < shape_[static_cast<std::size_t>(d)];
                }
                if (!inside) continue;
                for (int q = 0; q < s.field.index_size; ++q) {
                    std::int64_t raw = q * s.index_stride, img = q * s.index_stride;
                    for (int d = 0; d < dims_; ++d) {
                        auto k = static_cast<std::size_t>(d);
                        raw += c[k] * s.stride[k];
                        img += w[k] * s.stride[k];
                    }
                    s.data[static_cast<std::size_t>(raw)] = s.data[static_cast<std::size_t>(img)];
                }
            }
        }
    }
}

}  // namespace lbmc::sim
