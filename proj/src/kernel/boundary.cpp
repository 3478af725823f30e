#include "lbmc/kernel/boundary.hpp"

#include "lbmc/error.hpp"

namespace lbmc::kernel {

std::string boundary_mode_name(BoundaryMode m) {
    switch (m) {
        case BoundaryMode::FullFieldFlag: return "full_field_flag";
        case BoundaryMode::IndexList: return "index_list";
        case BoundaryMode::CompiledIn: return "compiled_in";
    }
    return "";
}

BoundaryMode parse_boundary_mode(const std::string& name) {
    for (BoundaryMode m : {BoundaryMode::FullFieldFlag, BoundaryMode::IndexList, BoundaryMode::CompiledIn})
        if (boundary_mode_name(m) == name) return m;
    throw ConfigError("unknown boundary mode '" + name + "'");
}

BoundarySpec no_slip(int flag_id) { return {BoundaryKind::NoSlip, flag_id, sym::sym("f_out"), {}}; }

BoundarySpec ubb(int flag_id, const std::vector<Expr>& wall_velocity, std::vector<std::string> payload) {
    Expr cu(0);
    for (std::size_t i = 0; i < wall_velocity.size(); ++i)
        cu += sym::sym("c_" + std::to_string(i)) * wall_velocity[i];
    Expr rule = sym::sym("f_out") - 2 * sym::sym("w") * cu / sym::sym("cs2");
    return {BoundaryKind::Ubb, flag_id, rule, std::move(payload)};
}

BoundarySpec custom_boundary(int flag_id, const Expr& rule, std::vector<std::string> payload) {
    return {BoundaryKind::Custom, flag_id, rule, std::move(payload)};
}

Expr link_value(const BoundarySpec& bc, const lattice::Stencil& s, int d, const Expr& f_out) {
    if (bc.flag_id == kFluid) throw ConfigError("boundary flag id must differ from the fluid flag");
    sym::ExprMap<Expr> sub;
    sub[sym::sym("f_out")] = f_out;
    sub[sym::sym("w")] = Expr(s.w[static_cast<std::size_t>(d)]);
    sub[sym::sym("cs2")] = Expr(s.cs2);
    for (int i = 0; i < 3; ++i) sub[sym::sym("c_" + std::to_string(i))] = Expr(s.c[static_cast<std::size_t>(d)][static_cast<std::size_t>(i)]);
    return sym::substitute(bc.rule, sub);
}

FlagField::FlagField(int d, std::array<int, 3> shp, std::array<bool, 3> per) : dims(d), shape(shp), periodic(per) {
    for (int i = d; i < 3; ++i) {
        shape[static_cast<std::size_t>(i)] = 1;
        periodic[static_cast<std::size_t>(i)] = false;
    }
    data.assign(static_cast<std::size_t>(shape[0]) * static_cast<std::size_t>(shape[1]) *
                    static_cast<std::size_t>(shape[2]),
                kFluid);
}

std::size_t FlagField::linear(std::array<int, 3> x) const {
    return static_cast<std::size_t>(x[0]) +
           static_cast<std::size_t>(shape[0]) *
               (static_cast<std::size_t>(x[1]) + static_cast<std::size_t>(shape[1]) * static_cast<std::size_t>(x[2]));
}

std::array<int, 3> FlagField::wrap(std::array<int, 3> x) const {
    for (int i = 0; i < dims; ++i) {
        auto k = static_cast<std::size_t>(i);
        if (!periodic[k]) continue;
        int n = shape[k] - 2;
        if (x[k] < 1) x[k] += n;
        if (x[k] > n) x[k] -= n;
    }
    return x;
}

IndexList build_index_list(const FlagField& flags, int flag_id, const lattice::Stencil& s) {
    if (flags.dims != s.d) throw ConfigError("flag field dimension does not match stencil " + s.name);
    IndexList list;
    list.dims = s.d;
    const int nz = s.d == 3 ? flags.shape[2] - 1 : 1;
    const int z0 = s.d == 3 ? 1 : 0;
    for (int z = z0; z < nz; ++z) {
        for (int y = 1; y < flags.shape[1] - 1; ++y) {
            for (int x = 1; x < flags.shape[0] - 1; ++x) {
                std::array<int, 3> cell{x, y, z};
                if (flags.at(cell) != kFluid) continue;
                for (int d = 0; d < s.q; ++d) {
                    const auto& c = s.c[static_cast<std::size_t>(d)];
                    if (c == lattice::Vec{0, 0, 0}) continue;
                    std::array<int, 3> nb{x + c[0], y + c[1], z + c[2]};
                    if (flags.at(flags.wrap(nb)) != flag_id) continue;
                    list.cells.push_back(cell);
                    list.directions.push_back(d);
                }
            }
        }
    }
    return list;
}

Kernel lower_boundary(const BoundarySpec& bc, const lattice::Stencil& s, Pattern next, BoundaryMode mode,
                      const Field& pdf, const Field& flags, const std::string& name) {
    if (mode == BoundaryMode::CompiledIn)
        throw ConfigError("compiled-in boundaries are part of the collision kernel, not a separate sweep");
    if (next == Pattern::CollideOnly) throw ConfigError("collide-only kernels have no boundary handling");
    if (pdf.index_size != s.q) throw ConfigError("field '" + pdf.name + "' does not match stencil " + s.name);

    Kernel k;
    k.name = name;
    k.dims = s.d;
    k.fields.push_back(pdf);
    const Pattern prev = predecessor(next);
    if (mode == BoundaryMode::IndexList) {
        k.iteration = Iteration::IndexList;
        k.payload = bc.payload;
    } else {
        k.fields.push_back(flags);
    }
    for (int d = 0; d < s.q; ++d) {
        const auto& c = s.c[static_cast<std::size_t>(d)];
        if (c == lattice::Vec{0, 0, 0}) continue;
        // Link from the fluid cell towards the wall along d. The next kernel
        // reads the reflected population (direction d-bar) of this cell.
        const int db = s.opposite(d);
        const Slot out = write_slot(s, prev, d);
        const Slot in = read_slot(s, next, db);
        Statement st{access(pdf, in.offset, in.index), link_value(bc, s, d, access(pdf, out.offset, out.index)),
                     std::nullopt};
        if (mode == BoundaryMode::IndexList) {
            k.links[d].push_back(st);
        } else {
            st.guard = Guard{access(flags, {c[0], c[1], c[2]}, 0), bc.flag_id};
            k.body.push_back(st);
        }
    }
    return k;
}

}  // namespace lbmc::kernel
