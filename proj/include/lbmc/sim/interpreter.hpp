#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbmc/kernel/boundary.hpp"
#include "lbmc/kernel/kernel.hpp"
#include "lbmc/sim/grid.hpp"
#include "lbmc/sym/ops.hpp"

namespace lbmc::sim {

/// A kernel translated to register bytecode for one grid. Arithmetic
/// follows the evaluation order of sym::eval_f64 and of the emitted C code.
class CompiledKernel {
public:
    CompiledKernel(const kernel::Kernel& k, const Grid& g);

    const kernel::Kernel& source() const { return kernel_; }
    /// Runs one sweep. Index-list kernels need `list`; every kernel
    /// parameter must be bound in `params`.
    void run(Grid& g, const sym::Bindings& params, const kernel::IndexList* list = nullptr) const;

    enum class Op : std::uint8_t { Load, LoadFlag, Store, Copy, Add, Mul, Div, Sqrt, Log, Skip, BufStore, BufLoad };
    struct Instr {
        Op op;
        std::int32_t dst = 0, a = 0, b = 0;
    };
    struct Access {
        std::int32_t field = 0;  // index into the field table, -1 for flags
        std::array<int, 3> offset{0, 0, 0};
        int index = 0;
        std::int64_t delta = 0;
    };
    struct Program {
        std::vector<Instr> code;
    };

private:
    kernel::Kernel kernel_;
    std::vector<std::string> field_names_;
    std::vector<Access> accesses_;
    std::vector<double> init_regs_;
    std::vector<std::pair<std::string, std::int32_t>> param_regs_;
    std::vector<std::pair<std::string, std::int32_t>> payload_regs_;
    std::vector<Program> programs_;  // one per statement list
    std::vector<int> link_dirs_;     // index-list kernels: direction of each program
    int buffers_ = 0;

    friend class ProgramBuilder;
};

}  // namespace lbmc::sim
