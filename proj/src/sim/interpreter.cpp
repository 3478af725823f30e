#include "lbmc/sim/interpreter.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <set>

#include "lbmc/error.hpp"

namespace lbmc::sim {

using sym::Expr;
using Op = CompiledKernel::Op;
using Instr = CompiledKernel::Instr;

class ProgramBuilder {
public:
    ProgramBuilder(CompiledKernel& ck, const Grid& g) : ck_(ck), g_(g) {
        const auto& k = ck.kernel_;
        for (const auto& f : k.fields) {
            if (f.type == kernel::ScalarType::F64) {
                field_ids_[f.name] = static_cast<std::int32_t>(ck.field_names_.size());
                ck.field_names_.push_back(f.name);
            } else {
                field_ids_[f.name] = -1;
            }
        }
        if (k.split) {
            for (std::size_t i = 0; i < k.split->buffered.size(); ++i)
                buffers_[k.split->buffered[i]] = static_cast<std::int32_t>(i);
            ck.buffers_ = static_cast<int>(k.split->buffered.size());
        }
        for (const auto& p : k.payload) payload_.insert(p);
    }

    CompiledKernel::Program build(const std::vector<kernel::Statement>& body) {
        prog_ = {};
        memo_.clear();
        assigned_.clear();
        loaded_.clear();
        std::set<std::string> defined;
        for (const auto& st : body)
            if (st.target.is_symbol()) defined.insert(st.target.name());
        for (const auto& [n, id] : buffers_) {
            if (defined.count(n)) continue;
            emit(Op::BufLoad, symbol_reg(n), id);
            assigned_.insert(n);
        }
        for (const auto& st : body) statement(st);
        return std::move(prog_);
    }

private:
    std::int32_t reg() {
        ck_.init_regs_.push_back(0.0);
        return static_cast<std::int32_t>(ck_.init_regs_.size() - 1);
    }

    std::int32_t constant(double v) {
        const auto key = std::bit_cast<std::uint64_t>(v);
        auto it = consts_.find(key);
        if (it != consts_.end()) return it->second;
        std::int32_t r = reg();
        ck_.init_regs_[static_cast<std::size_t>(r)] = v;
        consts_[key] = r;
        return r;
    }

    void emit(Op op, std::int32_t dst, std::int32_t a = 0, std::int32_t b = 0) { prog_.code.push_back({op, dst, a, b}); }

    std::int32_t access(const Expr& e) {
        const auto& k = ck_.kernel_;
        const auto& f = k.field(e.name());
        CompiledKernel::Access a;
        a.field = field_ids_.at(f.name);
        a.offset = e.offset();
        a.index = e.index();
        if (a.field >= 0) {
            const auto& s = g_.storage(f.name);
            if (s.field.index_size != f.index_size || s.field.layout != f.layout)
                throw ConfigError("grid field '" + f.name + "' does not match the kernel field");
            if (a.index < 0 || a.index >= f.index_size) throw ConfigError("index out of range for '" + f.name + "'");
            a.delta = a.index * s.index_stride;
            for (int d = 0; d < k.dims; ++d)
                a.delta += a.offset[static_cast<std::size_t>(d)] * s.stride[static_cast<std::size_t>(d)];
        } else {
            std::int64_t st = 1;
            for (int d = 0; d < k.dims; ++d) {
                a.delta += a.offset[static_cast<std::size_t>(d)] * st;
                st *= g_.shape()[static_cast<std::size_t>(d)];
            }
        }
        ck_.accesses_.push_back(a);
        return static_cast<std::int32_t>(ck_.accesses_.size() - 1);
    }

    std::int32_t symbol_reg(const std::string& n) {
        auto it = sym_regs_.find(n);
        if (it != sym_regs_.end()) return it->second;
        std::int32_t r = reg();
        sym_regs_[n] = r;
        return r;
    }

    std::int32_t compile(const Expr& e) {
        auto m = memo_.find(e);
        if (m != memo_.end()) return m->second;
        std::int32_t out = 0;
        switch (e.kind()) {
            case sym::Kind::Rational: out = constant(e.value().to_double()); break;
            case sym::Kind::Symbol: {
                const std::string& n = e.name();
                if (assigned_.count(n)) {
                    out = sym_regs_.at(n);
                } else if (payload_.count(n)) {
                    out = symbol_reg(n);
                    if (!payload_seen_.count(n)) {
                        payload_seen_.insert(n);
                        ck_.payload_regs_.emplace_back(n, out);
                    }
                } else {
                    out = symbol_reg(n);
                    if (!param_seen_.count(n)) {
                        param_seen_.insert(n);
                        ck_.param_regs_.emplace_back(n, out);
                    }
                }
                break;
            }
            case sym::Kind::Indexed: {
                std::int32_t a = access(e);
                out = reg();
                emit(ck_.accesses_[static_cast<std::size_t>(a)].field >= 0 ? Op::Load : Op::LoadFlag, out, a);
                loaded_.insert(e);
                break;
            }
            case sym::Kind::Sum:
            case sym::Kind::Product: {
                const Op op = e.is_sum() ? Op::Add : Op::Mul;
                bool first = true;
                for (const auto& c : e.args()) {
                    std::int32_t r = compile(c);
                    if (first) {
                        out = r;
                        first = false;
                    } else {
                        std::int32_t t = reg();
                        emit(op, t, out, r);
                        out = t;
                    }
                }
                break;
            }
            case sym::Kind::Power: {
                std::int32_t b = compile(e.base());
                const int n = std::abs(e.exponent());
                out = b;
                for (int i = 1; i < n; ++i) {
                    std::int32_t t = reg();
                    emit(Op::Mul, t, out, b);
                    out = t;
                }
                if (e.exponent() < 0) {
                    std::int32_t t = reg();
                    emit(Op::Div, t, constant(1.0), out);
                    out = t;
                }
                break;
            }
            case sym::Kind::Sqrt:
            case sym::Kind::Log: {
                std::int32_t a = compile(e.base());
                out = reg();
                emit(e.kind() == sym::Kind::Sqrt ? Op::Sqrt : Op::Log, out, a);
                break;
            }
        }
        memo_[e] = out;
        return out;
    }

    void statement(const kernel::Statement& st) {
        std::optional<std::map<Expr, std::int32_t, sym::ExprLess>> saved;
        std::size_t skip_at = 0;
        if (st.guard) {
            saved = memo_;
            std::int32_t a = access(st.guard->flag);
            if (ck_.accesses_[static_cast<std::size_t>(a)].field >= 0)
                throw ConfigError("guards must read an integer flag field");
            skip_at = prog_.code.size();
            emit(Op::Skip, 0, a, st.guard->value);
        }
        std::int32_t v = compile(st.value);
        if (st.target.is_symbol()) {
            const std::string& n = st.target.name();
            bool reassigned = assigned_.count(n) > 0;
            std::int32_t r = symbol_reg(n);
            if (r != v) emit(Op::Copy, r, v);
            assigned_.insert(n);
            if (buffers_.count(n)) emit(Op::BufStore, buffers_.at(n), r);
            if (reassigned || st.guard) memo_.clear();
        } else if (st.target.is_indexed()) {
            std::int32_t a = access(st.target);
            if (ck_.accesses_[static_cast<std::size_t>(a)].field < 0) throw ConfigError("kernels cannot write flags");
            emit(Op::Store, a, v);
            if (loaded_.count(st.target)) memo_.clear();
        } else {
            throw ConfigError("statement target must be a symbol or field access");
        }
        if (st.guard) {
            prog_.code[skip_at].dst = static_cast<std::int32_t>(prog_.code.size() - skip_at - 1);
            if (!st.target.is_symbol()) memo_ = *saved;
            else memo_.clear();
        }
    }

    CompiledKernel& ck_;
    const Grid& g_;
    CompiledKernel::Program prog_;
    std::map<std::string, std::int32_t> field_ids_;
    std::map<std::string, std::int32_t> buffers_;
    std::set<std::string> payload_;
    std::map<std::string, std::int32_t> sym_regs_;
    std::set<std::string> param_seen_, payload_seen_;
    std::map<std::uint64_t, std::int32_t> consts_;
    std::map<Expr, std::int32_t, sym::ExprLess> memo_;
    std::set<std::string> assigned_;
    std::set<Expr, sym::ExprLess> loaded_;
};

CompiledKernel::CompiledKernel(const kernel::Kernel& k, const Grid& g) : kernel_(k) {
    if (k.dims != g.dims()) throw ConfigError("kernel '" + k.name + "' does not match the grid dimension");
    ProgramBuilder b(*this, g);
    if (k.iteration == kernel::Iteration::IndexList) {
        for (const auto& [dir, body] : k.links) {
            link_dirs_.push_back(dir);
            programs_.push_back(b.build(body));
        }
    } else if (k.split) {
        for (const auto& loop : k.split->loops) programs_.push_back(b.build(loop));
    } else {
        programs_.push_back(b.build(k.body));
    }
}

namespace {

struct RunState {
    const Grid* grid;
    std::vector<double*> data;
    std::vector<std::array<std::int64_t, 3>> stride;
    std::vector<std::int64_t> istride;
    const std::int32_t* flags;
    std::array<std::int64_t, 3> flag_stride;
    std::vector<std::int64_t> base;  // per field, current cell
    std::int64_t flag_base = 0;
    bool safe = true;
    Cell cell{0, 0, 0};
};

}  // namespace

void CompiledKernel::run(Grid& g, const sym::Bindings& params, const kernel::IndexList* list) const {
    const int dims = kernel_.dims;
    RunState rs;
    rs.grid = &g;
    for (const auto& n : field_names_) {
        auto& s = g.storage(n);
        rs.data.push_back(s.data.data());
        rs.stride.push_back(s.stride);
        rs.istride.push_back(s.index_stride);
    }
    rs.base.assign(field_names_.size(), 0);
    rs.flags = g.flags().data.data();
    rs.flag_stride = {1, g.shape()[0], static_cast<std::int64_t>(g.shape()[0]) * g.shape()[1]};

    std::vector<double> regs = init_regs_;
    for (const auto& [name, r] : param_regs_) {
        auto it = params.find(name);
        if (it == params.end())
            throw ConfigError("kernel '" + kernel_.name + "' needs a value for parameter '" + name + "'");
        regs[static_cast<std::size_t>(r)] = it->second;
    }

    const auto& shape = g.shape();
    auto set_cell = [&](const Cell& c) {
        rs.cell = c;
        rs.safe = true;
        for (int d = 0; d < dims; ++d) {
            auto k = static_cast<std::size_t>(d);
            if (g.periodic()[k] && (c[k] < 2 || c[k] > shape[k] - 3)) rs.safe = false;
        }
        for (std::size_t f = 0; f < rs.base.size(); ++f) {
            std::int64_t b = 0;
            for (int d = 0; d < dims; ++d) b += c[static_cast<std::size_t>(d)] * rs.stride[f][static_cast<std::size_t>(d)];
            rs.base[f] = b;
        }
        rs.flag_base = 0;
        for (int d = 0; d < dims; ++d)
            rs.flag_base += c[static_cast<std::size_t>(d)] * rs.flag_stride[static_cast<std::size_t>(d)];
    };

    auto address = [&](const Access& a) -> std::int64_t {
        if (a.field >= 0) {
            auto f = static_cast<std::size_t>(a.field);
            if (rs.safe) return rs.base[f] + a.delta;
            std::int64_t i = a.index * rs.istride[f];
            for (int d = 0; d < dims; ++d) {
                auto k = static_cast<std::size_t>(d);
                i += g.wrap(d, rs.cell[k] + a.offset[k]) * rs.stride[f][k];
            }
            return i;
        }
        if (rs.safe) return rs.flag_base + a.delta;
        std::int64_t i = 0;
        for (int d = 0; d < dims; ++d) {
            auto k = static_cast<std::size_t>(d);
            i += g.wrap(d, rs.cell[k] + a.offset[k]) * rs.flag_stride[k];
        }
        return i;
    };

    std::vector<std::vector<double>> buffers(static_cast<std::size_t>(buffers_));
    int buf_pos = 0;

    auto exec = [&](const Program& p) {
        double* R = regs.data();
        const std::size_t n = p.code.size();
        for (std::size_t pc = 0; pc < n; ++pc) {
            const Instr& in = p.code[pc];
            switch (in.op) {
                case Op::Load: {
                    const Access& a = accesses_[static_cast<std::size_t>(in.a)];
                    R[in.dst] = rs.data[static_cast<std::size_t>(a.field)][address(a)];
                    break;
                }
                case Op::LoadFlag:
                    R[in.dst] = static_cast<double>(rs.flags[address(accesses_[static_cast<std::size_t>(in.a)])]);
                    break;
                case Op::Store: {
                    const Access& a = accesses_[static_cast<std::size_t>(in.dst)];
                    rs.data[static_cast<std::size_t>(a.field)][address(a)] = R[in.a];
                    break;
                }
                case Op::Copy: R[in.dst] = R[in.a]; break;
                case Op::Add: R[in.dst] = R[in.a] + R[in.b]; break;
                case Op::Mul: R[in.dst] = R[in.a] * R[in.b]; break;
                case Op::Div: R[in.dst] = R[in.a] / R[in.b]; break;
                case Op::Sqrt: R[in.dst] = std::sqrt(R[in.a]); break;
                case Op::Log: R[in.dst] = std::log(R[in.a]); break;
                case Op::Skip:
                    if (rs.flags[address(accesses_[static_cast<std::size_t>(in.a)])] != in.b)
                        pc += static_cast<std::size_t>(in.dst);
                    break;
                case Op::BufStore: buffers[static_cast<std::size_t>(in.dst)][static_cast<std::size_t>(buf_pos)] = R[in.a]; break;
                case Op::BufLoad: R[in.dst] = buffers[static_cast<std::size_t>(in.a)][static_cast<std::size_t>(buf_pos)]; break;
            }
        }
    };

    if (kernel_.iteration == kernel::Iteration::IndexList) {
        if (!list) throw ConfigError("index-list kernel '" + kernel_.name + "' needs an index list");
        if (list->payload.size() != kernel_.payload.size())
            throw ConfigError("index list payload does not match kernel '" + kernel_.name + "'");
        std::map<int, std::size_t> by_dir;
        for (std::size_t i = 0; i < link_dirs_.size(); ++i) by_dir[link_dirs_[i]] = i;
        std::vector<std::int32_t> payload_col(payload_regs_.size());
        for (std::size_t j = 0; j < payload_regs_.size(); ++j) {
            std::size_t col = 0;
            while (kernel_.payload[col] != payload_regs_[j].first) ++col;
            payload_col[j] = static_cast<std::int32_t>(col);
        }
        for (std::size_t i = 0; i < list->size(); ++i) {
            auto it = by_dir.find(list->directions[i]);
            if (it == by_dir.end()) continue;
            for (std::size_t j = 0; j < payload_regs_.size(); ++j)
                regs[static_cast<std::size_t>(payload_regs_[j].second)] =
                    list->payload[static_cast<std::size_t>(payload_col[j])][i];
            set_cell(list->cells[i]);
            exec(programs_[it->second]);
        }
        return;
    }

    const int z0 = dims == 3 ? 1 : 0, z1 = dims == 3 ? shape[2] - 1 : 1;
    const int nx = shape[0] - 2;
    if (kernel_.split) {
        const int block = kernel_.split->block;
        for (auto& b : buffers) b.assign(static_cast<std::size_t>(block), 0.0);
        for (int z = z0; z < z1; ++z)
            for (int y = 1; y < shape[1] - 1; ++y)
                for (int b0 = 1; b0 <= nx; b0 += block) {
                    const int e0 = std::min(b0 + block, nx + 1);
                    for (const auto& p : programs_)
                        for (int x = b0; x < e0; ++x) {
                            buf_pos = x - b0;
                            set_cell({x, y, z});
                            exec(p);
                        }
                }
        return;
    }
    for (int z = z0; z < z1; ++z)
        for (int y = 1; y < shape[1] - 1; ++y)
            for (int x = 1; x <= nx; ++x) {
                set_cell({x, y, z});
                exec(programs_[0]);
            }
}

}  // namespace lbmc::sim
