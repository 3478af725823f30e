#include "lbmc/kernel/emit.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "lbmc/error.hpp"

namespace lbmc::kernel {

std::string format_double(double v) {
    if (!std::isfinite(v)) throw DomainError("non-finite constant in kernel");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

namespace {

bool valid_identifier(const std::string& n) {
    if (n.empty() || n[0] == '_' || std::isdigit(static_cast<unsigned char>(n[0]))) return false;
    for (char ch : n)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
    return true;
}

const char* kCell[3] = {"_c0", "_c1", "_c2"};

class Emitter {
public:
    Emitter(const Kernel& k) : k_(k) {
        if (k.split)
            for (const auto& b : k.split->buffered) buffered_.insert(b);
    }

    std::string expr(const Expr& e) const {
        switch (e.kind()) {
            case sym::Kind::Rational: {
                std::string s = format_double(e.value().to_double());
                return s[0] == '-' ? "(" + s + ")" : s;
            }
            case sym::Kind::Symbol: {
                if (!valid_identifier(e.name())) throw ConfigError("symbol '" + e.name() + "' is not a C identifier");
                if (buffered_.count(e.name())) return "_buf_" + e.name() + "[_c0 - _b0]";
                return e.name();
            }
            case sym::Kind::Indexed: return address(e);
            case sym::Kind::Sum:
            case sym::Kind::Product: {
                const char* op = e.is_sum() ? " + " : " * ";
                std::string acc;
                bool first = true;
                for (const auto& c : e.args()) {
                    acc = first ? expr(c) : "(" + acc + op + expr(c) + ")";
                    first = false;
                }
                return acc;
            }
            case sym::Kind::Power: {
                int n = std::abs(e.exponent());
                std::string b = expr(e.base());
                std::string acc = b;
                for (int i = 1; i < n; ++i) acc = "(" + acc + " * " + b + ")";
                return e.exponent() < 0 ? "(1.0 / " + acc + ")" : acc;
            }
            case sym::Kind::Sqrt: return "sqrt(" + expr(e.base()) + ")";
            case sym::Kind::Log: return "log(" + expr(e.base()) + ")";
        }
        throw ConfigError("unresolved expression kind in kernel");
    }

    std::string address(const Expr& e) const {
        const Field& f = k_.field(e.name());
        std::ostringstream os;
        os << "_data_" << f.name << "[";
        for (int i = 0; i < k_.dims; ++i) {
            int o = e.offset()[static_cast<std::size_t>(i)];
            os << "(" << kCell[i];
            if (o != 0) os << (o > 0 ? " + " : " - ") << std::abs(o);
            os << ")*_stride_" << f.name << "_" << i << " + ";
        }
        os << e.index() << "*_stride_" << f.name << "_q]";
        return os.str();
    }

    void statements(std::ostringstream& os, const std::vector<Statement>& body, const std::string& ind) const {
        std::set<std::string> declared;
        for (const auto& st : body) {
            std::string lhs;
            if (st.target.is_indexed()) {
                lhs = address(st.target);
            } else {
                const std::string& n = st.target.name();
                if (!valid_identifier(n)) throw ConfigError("symbol '" + n + "' is not a C identifier");
                if (buffered_.count(n)) {
                    lhs = expr(st.target);
                } else if (declared.insert(n).second) {
                    if (st.guard) {
                        os << ind << "double " << n << " = 0.0;\n";
                        lhs = n;
                    } else {
                        lhs = "double " + n;
                    }
                } else {
                    lhs = n;
                }
            }
            std::string line = lhs + " = " + expr(st.value) + ";";
            if (st.guard)
                os << ind << "if (" << address(st.guard->flag) << " == " << st.guard->value << ") " << line << "\n";
            else
                os << ind << line << "\n";
        }
    }

private:
    const Kernel& k_;
    std::set<std::string> buffered_;
};

}  // namespace

EmittedSource emit(const Kernel& k, const std::string& name) {
    if (!valid_identifier(name)) throw ConfigError("kernel name '" + name + "' is not a C identifier");
    Emitter em(k);
    const int d = k.dims;

    std::set<std::string> written;
    for (const auto* list : k.statement_lists())
        for (const auto& st : *list)
            if (st.target.is_indexed()) written.insert(st.target.name());

    std::vector<std::string> params, abi;
    for (const auto& f : k.fields) {
        bool w = written.count(f.name) > 0;
        std::string type = f.type == ScalarType::I32 ? "int32_t" : "double";
        params.push_back(std::string(w ? "" : "const ") + type + "* _data_" + f.name);
        abi.push_back("field " + f.name + " (" + type + (w ? ", read/write" : ", read-only") + ", index size " +
                      std::to_string(f.index_size) + ")");
    }
    for (int i = 0; i < d; ++i) {
        params.push_back("int64_t _size_" + std::to_string(i));
        abi.push_back("shape of spatial dimension " + std::to_string(i) + " including ghost layers");
    }
    for (const auto& f : k.fields) {
        for (int i = 0; i < d; ++i) {
            params.push_back("int64_t _stride_" + f.name + "_" + std::to_string(i));
            abi.push_back("stride of " + f.name + " along spatial dimension " + std::to_string(i));
        }
        params.push_back("int64_t _stride_" + f.name + "_q");
        abi.push_back("stride of " + f.name + " along the index dimension");
    }
    if (k.iteration == Iteration::IndexList) {
        params.push_back("const int32_t* _idx");
        abi.push_back("index list entries: " + std::to_string(d) + " cell coordinates and the link direction");
        params.push_back("int64_t _n_idx");
        abi.push_back("number of index list entries");
        if (!k.payload.empty()) {
            params.push_back("const double* _payload");
            std::string cols;
            for (const auto& n : k.payload) cols += (cols.empty() ? "" : ", ") + n;
            abi.push_back("payload columns (" + cols + "), column-major");
        }
    }
    for (const auto& p : k.parameters()) {
        if (!valid_identifier(p)) throw ConfigError("parameter '" + p + "' is not a C identifier");
        params.push_back("double " + p);
        abi.push_back("scalar " + p);
    }

    std::ostringstream os;
    os << "#include <math.h>\n#include <stdint.h>\n\n";
    os << "void " << name << "(";
    for (std::size_t i = 0; i < params.size(); ++i) os << (i ? ",\n        " : "") << params[i];
    os << ")\n{\n";

    if (k.iteration == Iteration::IndexList) {
        os << "    for (int64_t _i = 0; _i < _n_idx; ++_i) {\n";
        for (int i = 0; i < d; ++i)
            os << "        const int64_t " << kCell[i] << " = _idx[_i * " << d + 1 << " + " << i << "];\n";
        os << "        switch (_idx[_i * " << d + 1 << " + " << d << "]) {\n";
        for (const auto& [dir, body] : k.links) {
            os << "        case " << dir << ": {\n";
            for (std::size_t j = 0; j < k.payload.size(); ++j)
                os << "            const double " << k.payload[j] << " = _payload[" << j << " * _n_idx + _i];\n";
            em.statements(os, body, "            ");
            os << "            break;\n        }\n";
        }
        os << "        default: break;\n        }\n    }\n}\n";
    } else {
        std::string ind = "    ";
        for (int i = d - 1; i >= 1; --i) {
            os << ind << "for (int64_t " << kCell[i] << " = 1; " << kCell[i] << " < _size_" << i << " - 1; ++"
               << kCell[i] << ") {\n";
            ind += "    ";
        }
        if (k.split) {
            const auto& sp = *k.split;
            os << ind << "for (int64_t _b0 = 1; _b0 < _size_0 - 1; _b0 += " << sp.block << ") {\n";
            std::string in2 = ind + "    ";
            os << in2 << "const int64_t _e0 = _b0 + " << sp.block << " < _size_0 - 1 ? _b0 + " << sp.block
               << " : _size_0 - 1;\n";
            for (const auto& b : sp.buffered) os << in2 << "double _buf_" << b << "[" << sp.block << "];\n";
            for (const auto& loop : sp.loops) {
                os << in2 << "for (int64_t _c0 = _b0; _c0 < _e0; ++_c0) {\n";
                em.statements(os, loop, in2 + "    ");
                os << in2 << "}\n";
            }
            os << ind << "}\n";
        } else {
            os << ind << "for (int64_t _c0 = 1; _c0 < _size_0 - 1; ++_c0) {\n";
            em.statements(os, k.body, ind + "    ");
            os << ind << "}\n";
        }
        for (int i = d - 1; i >= 1; --i) {
            ind.resize(ind.size() - 4);
            os << ind << "}\n";
        }
        os << "}\n";
    }

    std::ostringstream ab;
    ab << "kernel " << name << "\n";
    for (std::size_t i = 0; i < abi.size(); ++i) ab << "  " << i << ": " << params[i] << "  -- " << abi[i] << "\n";
    return {name, os.str(), ab.str()};
}

}  // namespace lbmc::kernel
