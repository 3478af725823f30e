#include "lbmc/sim/scenario.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lbmc/error.hpp"

namespace lbmc::sim {

std::string scenario_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::TaylorGreen2D: return "taylor_green";
        case ScenarioKind::Couette: return "couette";
        case ScenarioKind::LidDrivenCavity: return "lid_driven_cavity";
        case ScenarioKind::Periodic: return "periodic";
    }
    return "";
}

ScenarioKind parse_scenario(const std::string& name) {
    for (ScenarioKind k : {ScenarioKind::TaylorGreen2D, ScenarioKind::Couette, ScenarioKind::LidDrivenCavity,
                           ScenarioKind::Periodic})
        if (scenario_name(k) == name) return k;
    throw ConfigError("unknown scenario '" + name + "'");
}

namespace {

int dims_of(const ScenarioConfig& c) { return c.rule.stencil.d; }

std::array<bool, 3> periodicity(const ScenarioConfig& c) {
    switch (c.kind) {
        case ScenarioKind::TaylorGreen2D:
        case ScenarioKind::Periodic: return {true, true, true};
        case ScenarioKind::Couette: return {true, false, true};
        case ScenarioKind::LidDrivenCavity: return {false, false, false};
    }
    return {true, true, true};
}

std::pair<int, int> parse_face(const std::string& f, int d) {
    if (f.size() != 2 || (f[1] != '-' && f[1] != '+') || f[0] < 'x' || f[0] > 'z')
        throw ConfigError("face '" + f + "' must be one of x-, x+, y-, y+, z-, z+");
    int dim = f[0] - 'x';
    if (dim >= d) throw ConfigError("face '" + f + "' does not exist in " + std::to_string(d) + " dimensions");
    return {dim, f[1] == '-' ? 0 : 1};
}

double shear_viscosity(const ScenarioConfig& c) {
    if (!c.shear_rate) throw ConfigError("the scenario needs the shear relaxation rate for its analytic solution");
    return c.rule.stencil.cs2.to_double() * (1.0 / *c.shear_rate - 0.5);
}

void mark_faces(kernel::FlagField& flags, const std::vector<FaceAssignment>& faces, int d) {
    for (std::size_t i = 0; i < faces.size(); ++i) {
        auto [dim, side] = parse_face(faces[i].face, d);
        const int coord = side == 0 ? 0 : flags.shape[static_cast<std::size_t>(dim)] - 1;
        for (int z = 0; z < flags.shape[2]; ++z)
            for (int y = 0; y < flags.shape[1]; ++y)
                for (int x = 0; x < flags.shape[0]; ++x) {
                    std::array<int, 3> c{x, y, z};
                    if (c[static_cast<std::size_t>(dim)] == coord) flags.at(c) = static_cast<int>(i) + 1;
                }
    }
}

std::vector<double> velocity_values(const Simulation& s) {
    std::vector<double> v;
    const int d = s.stencil().d;
    for (const auto& u : s.velocity_field())
        for (int k = 0; k < d; ++k) v.push_back(u[static_cast<std::size_t>(k)]);
    return v;
}

Sample sample(const Simulation& s, bool entropy) {
    Sample out;
    out.step = s.time();
    out.mass = s.mass();
    out.momentum = s.momentum();
    out.kinetic_energy = s.kinetic_energy();
    if (entropy) out.entropy = discrete_entropy(s);
    return out;
}

Snapshot snapshot(const Simulation& s) {
    Snapshot out;
    out.step = s.time();
    out.shape = s.grid().interior();
    out.components = s.stencil().d;
    out.values = velocity_values(s);
    return out;
}

}  // namespace

std::vector<kernel::BoundarySpec> boundary_specs(const std::vector<FaceAssignment>& faces, int d,
                                                 sym::Bindings& params) {
    std::vector<kernel::BoundarySpec> out;
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (faces[i].kind == WallKind::NoSlip) {
            out.push_back(kernel::no_slip(id));
        } else {
            std::vector<sym::Expr> u;
            std::vector<std::string> names;
            for (int k = 0; k < d; ++k) {
                std::string n = "u_wall" + std::to_string(id) + "_" + std::to_string(k);
                names.push_back(n);
                u.push_back(sym::sym(n));
                params[n] = faces[i].velocity[static_cast<std::size_t>(k)];
            }
            out.push_back(kernel::ubb(id, u, names));
        }
    }
    return out;
}

std::vector<FaceAssignment> default_faces(const ScenarioConfig& c) {
    const int d = dims_of(c);
    std::vector<FaceAssignment> f;
    switch (c.kind) {
        case ScenarioKind::TaylorGreen2D:
        case ScenarioKind::Periodic: break;
        case ScenarioKind::Couette:
            f.push_back({"y-", WallKind::NoSlip, {0.0, 0.0, 0.0}});
            f.push_back({"y+", WallKind::Ubb, {c.velocity, 0.0, 0.0}});
            break;
        case ScenarioKind::LidDrivenCavity:
            f.push_back({"y+", WallKind::Ubb, {c.velocity, 0.0, 0.0}});
            for (const char* face : {"x-", "x+", "y-", "z-", "z+"}) {
                if (face[0] - 'x' >= d) continue;
                f.push_back({face, WallKind::NoSlip, {0.0, 0.0, 0.0}});
            }
            break;
    }
    return f;
}

Simulation prepare(const ScenarioConfig& c) {
    const int d = dims_of(c);
    if (c.kind == ScenarioKind::TaylorGreen2D && d != 2) throw ConfigError("the Taylor-Green vortex is two-dimensional");
    if (c.steps < 0 || c.sample_every <= 0) throw ConfigError("step count must be non-negative and sampling positive");

    SimulationSetup su;
    su.rule = c.rule;
    su.equilibrium = c.equilibrium;
    su.size = c.size;
    su.periodic = periodicity(c);
    su.streaming = c.streaming;
    su.boundary_mode = c.boundary_mode;
    su.split_block = c.split_block;
    su.layout = c.layout;
    su.params = c.params;

    auto faces = c.faces.empty() ? default_faces(c) : c.faces;
    std::array<std::array<bool, 2>, 3> covered{};
    for (const auto& f : faces) {
        auto [dim, side] = parse_face(f.face, d);
        if (su.periodic[static_cast<std::size_t>(dim)])
            throw ConfigError("face '" + f.face + "' is periodic in scenario " + scenario_name(c.kind));
        covered[static_cast<std::size_t>(dim)][static_cast<std::size_t>(side)] = true;
    }
    for (int k = 0; k < d; ++k) {
        auto kk = static_cast<std::size_t>(k);
        if (!su.periodic[kk] && !(covered[kk][0] && covered[kk][1]))
            throw ConfigError(std::string("non-periodic dimension ") + static_cast<char>('x' + k) +
                              " needs a boundary on both faces");
    }
    su.boundaries = boundary_specs(faces, d, su.params);

    Simulation sim(std::move(su));
    mark_faces(sim.flags(), faces, d);

    const auto n = sim.grid().interior();
    const double U = c.velocity;
    switch (c.kind) {
        case ScenarioKind::TaylorGreen2D: {
            const double kx = 2.0 * std::numbers::pi / n[0], ky = 2.0 * std::numbers::pi / n[1];
            sim.initialize([&](const Cell& x) {
                const double px = kx * (x[0] - 1), py = ky * (x[1] - 1);
                return Macroscopic{1.0, {-U * std::cos(px) * std::sin(py), U * std::sin(px) * std::cos(py), 0.0}};
            });
            break;
        }
        case ScenarioKind::Periodic: {
            // Shear wave along the last dimension plus a density bump.
            const int last = d - 1;
            const double k = 2.0 * std::numbers::pi / n[static_cast<std::size_t>(last)];
            sim.initialize([&](const Cell& x) {
                const double p = k * (x[static_cast<std::size_t>(last)] - 1);
                return Macroscopic{1.0 + 0.01 * std::cos(p), {U * std::sin(p), 0.0, 0.0}};
            });
            break;
        }
        case ScenarioKind::Couette:
        case ScenarioKind::LidDrivenCavity:
            sim.initialize([](const Cell&) { return Macroscopic{1.0, {0.0, 0.0, 0.0}}; });
            break;
    }
    return sim;
}

double discrete_entropy(const Simulation& s) {
    const auto& st = s.stencil();
    const auto p = s.populations();
    double h = 0.0;
    std::size_t cell = 0;
    s.grid().for_each_interior([&](const Cell& c) {
        if (s.is_fluid(c))
            for (int q = 0; q < st.q; ++q) {
                const double f = p[cell * static_cast<std::size_t>(st.q) + static_cast<std::size_t>(q)];
                h -= f * std::log(f / st.w[static_cast<std::size_t>(q)].to_double());
            }
        ++cell;
    });
    return h;
}

double energy_decay_rate(const std::vector<Sample>& samples, long from) {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& s : samples) {
        if (s.step < from) continue;
        if (!(s.kinetic_energy > 0.0)) throw RuntimeFailure("kinetic energy vanished; cannot fit a decay rate");
        const double x = static_cast<double>(s.step), y = std::log(s.kinetic_energy);
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (n < 2 || den == 0.0) throw RuntimeFailure("too few samples for a decay fit");
    return (n * sxy - sx * sy) / den;
}

ScenarioResult run_scenario(const ScenarioConfig& c) {
    Simulation sim = prepare(c);
    ScenarioResult r;
    const int d = dims_of(c);

    auto record = [&] { r.samples.push_back(sample(sim, c.entropy)); };
    record();
    std::vector<double> previous = velocity_values(sim);
    bool steady = false;
    while (sim.time() < c.steps) {
        sim.step();
        if (sim.time() % c.sample_every == 0) record();
        if (c.snapshot_every > 0 && sim.time() % c.snapshot_every == 0) r.snapshots.push_back(snapshot(sim));
        if (c.kind == ScenarioKind::Couette && sim.time() % 100 == 0) {
            auto now = velocity_values(sim);
            double diff = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < now.size(); ++i) {
                diff += (now[i] - previous[i]) * (now[i] - previous[i]);
                norm += now[i] * now[i];
            }
            previous = std::move(now);
            if (norm > 0.0 && std::sqrt(diff / norm) < 1e-10) {
                steady = true;
                break;
            }
        }
    }
    if (r.samples.back().step != sim.time()) record();
    if (r.snapshots.empty() || r.snapshots.back().step != sim.time()) r.snapshots.push_back(snapshot(sim));

    const auto& first = r.samples.front();
    const auto& last = r.samples.back();
    r.summary["steps"] = static_cast<double>(sim.time());
    r.summary["mass_drift"] = std::abs(last.mass - first.mass) / first.mass;

    const auto n = sim.grid().interior();
    switch (c.kind) {
        case ScenarioKind::TaylorGreen2D: {
            const double nu = shear_viscosity(c);
            const double kx = 2.0 * std::numbers::pi / n[0], ky = 2.0 * std::numbers::pi / n[1];
            const double slope = energy_decay_rate(r.samples, c.steps / 10);
            const double measured = -slope / (2.0 * (kx * kx + ky * ky));
            r.summary["nu_expected"] = nu;
            r.summary["nu_measured"] = measured;
            r.summary["nu_relative_error"] = std::abs(measured - nu) / nu;
            break;
        }
        case ScenarioKind::Couette: {
            r.converged = steady;
            auto faces = c.faces.empty() ? default_faces(c) : c.faces;
            double u_bottom = 0.0, u_top = 0.0;
            for (const auto& f : faces) {
                if (f.face == "y-") u_bottom = f.kind == WallKind::Ubb ? f.velocity[0] : 0.0;
                if (f.face == "y+") u_top = f.kind == WallKind::Ubb ? f.velocity[0] : 0.0;
            }
            double dev = 0.0, ke = 0.0;
            sim.grid().for_each_interior([&](const Cell& x) {
                const double y = (x[1] - 0.5) / n[1];
                const double ux = u_bottom + (u_top - u_bottom) * y;
                const auto m = sim.macroscopic(x);
                dev = std::max(dev, std::abs(m.u[0] - ux));
                for (int k = 1; k < d; ++k) dev = std::max(dev, std::abs(m.u[static_cast<std::size_t>(k)]));
            });
            // Integral of u^2/2 over the channel height, times the cross section.
            const double du = u_top - u_bottom;
            ke = 0.5 * n[1] * (u_bottom * u_bottom + u_bottom * du + du * du / 3.0);
            for (int k = 0; k < d; ++k)
                if (k != 1) ke *= n[static_cast<std::size_t>(k)];
            r.summary["max_deviation"] = dev;
            r.summary["kinetic_energy_analytic"] = ke;
            r.summary["kinetic_energy"] = last.kinetic_energy;
            r.summary["converged"] = steady ? 1.0 : 0.0;
            break;
        }
        case ScenarioKind::LidDrivenCavity:
        case ScenarioKind::Periodic: r.summary["kinetic_energy"] = last.kinetic_energy; break;
    }
    return r;
}

void write_samples(std::ostream& os, const std::vector<Sample>& samples) {
    const bool entropy = !samples.empty() && samples.front().entropy.has_value();
    os << "step,mass,momentum_x,momentum_y,momentum_z,kinetic_energy" << (entropy ? ",entropy" : "") << "\n";
    os.precision(17);
    for (const auto& s : samples) {
        os << s.step << "," << s.mass << "," << s.momentum[0] << "," << s.momentum[1] << "," << s.momentum[2] << ","
           << s.kinetic_energy;
        if (entropy) os << "," << s.entropy.value_or(0.0);
        os << "\n";
    }
}

void write_snapshot(std::ostream& os, const Snapshot& s) {
    os << "lbmc-snapshot 1\nfield velocity\nshape " << s.shape[0] << " " << s.shape[1] << " " << s.shape[2]
       << "\ncomponents " << s.components << "\nstep " << s.step << "\ndata " << s.values.size()
       << " float64 little-endian\n";
    for (double v : s.values) {
        unsigned char b[8];
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        os.write(reinterpret_cast<const char*>(b), 8);
    }
}

Snapshot read_snapshot(std::istream& is) {
    Snapshot s;
    std::string line, word;
    auto next = [&](const std::string& key) {
        if (!std::getline(is, line)) throw ConfigError("truncated snapshot header");
        std::istringstream ls(line);
        ls >> word;
        if (word != key) throw ConfigError("snapshot header: expected '" + key + "'");
        return ls.str().substr(word.size());
    };
    next("lbmc-snapshot");
    next("field");
    std::istringstream(next("shape")) >> s.shape[0] >> s.shape[1] >> s.shape[2];
    std::istringstream(next("components")) >> s.components;
    std::istringstream(next("step")) >> s.step;
    std::size_t count = 0;
    std::istringstream(next("data")) >> count;
    s.values.resize(count);
    for (auto& v : s.values) {
        unsigned char b[8];
        if (!is.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("truncated snapshot data");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        v = std::bit_cast<double>(bits);
    }
    return s;
}

}  // namespace lbmc::sim
