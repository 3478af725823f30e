#pragma once

#include <string>

#include "lbmc/kernel/kernel.hpp"

namespace lbmc::kernel {

struct EmittedSource {
    std::string name;
    std::string code;  // C99 translation unit
    std::string abi;   // human-readable parameter list
};

/// Emits one C99 function. Parameter order:
///   1. field base pointers in declaration order
///   2. shape of every spatial dimension (ghost layer included)
///   3. per field: stride of every spatial dimension, then of the index
///      dimension
///   4. index-list kernels: entry buffer (dims coordinates plus direction
///      per entry, int32), entry count, then the payload columns
///      (double, column-major) if any
///   5. scalar parameters sorted by name
EmittedSource emit(const Kernel& k, const std::string& name);

/// Formats a double so that it reads back to the same value.
std::string format_double(double v);

}  // namespace lbmc::kernel
