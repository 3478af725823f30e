#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lbmc/lattice/stencil.hpp"
#include "lbmc/methods/method.hpp"
#include "lbmc/sym/expr.hpp"

namespace lbmc::kernel {

using sym::Expr;
using sym::Offset;

enum class Layout { SoA, AoS };
enum class ScalarType { F64, I32 };

/// A grid-shaped array with `dims` spatial dimensions and one index
/// dimension of size `index_size`. Kernels address it relative to the
/// current cell.
struct Field {
    std::string name;
    int dims = 2;
    int index_size = 1;
    Layout layout = Layout::SoA;
    ScalarType type = ScalarType::F64;
};

/// Relative access `field[x + offset](index)`, represented as an indexed leaf.
Expr access(const Field& f, const Offset& offset, int index);

enum class Pattern { Pull, Push, CollideOnly, AaEven, AaOdd, EsoEven, EsoOdd };

std::string pattern_name(Pattern p);
Pattern parse_pattern(const std::string& name);
bool in_place(Pattern p);

/// The kernel whose output storage state `p` consumes: the other parity for
/// AA and EsoTwist, the pattern itself otherwise.
Pattern predecessor(Pattern p);

/// Location relative to a cell: spatial offset plus index slot.
struct Slot {
    Offset offset{0, 0, 0};
    int index = 0;
    friend bool operator==(const Slot&, const Slot&) = default;
};

/// Where a kernel of pattern `p` reads the pre-collision population q of
/// the current cell.
Slot read_slot(const lattice::Stencil& s, Pattern p, int q);
/// Where a kernel of pattern `p` writes the post-collision population q of
/// the current cell.
Slot write_slot(const lattice::Stencil& s, Pattern p, int q);

struct Guard {
    Expr flag;  // access into an integer field
    int value = 0;
};

/// `target = value`, executed only if the guard's flag equals its value.
/// Targets are symbols (cell-local temporaries) or field accesses (writes).
struct Statement {
    Expr target;
    Expr value;
    std::optional<Guard> guard;
};

/// Inner-loop splitting: loop 0 fills one line buffer per buffered symbol,
/// the remaining loops read them back.
struct Split {
    int block = 0;
    std::vector<std::string> buffered;
    std::vector<std::vector<Statement>> loops;
};

enum class Iteration { Cells, IndexList };

/// Cell sweeps run over the interior [1, n-2] of every spatial dimension;
/// the innermost loop is dimension 0. Index-list kernels run once per list
/// entry with the body chosen by the entry's link direction.
struct Kernel {
    std::string name;
    int dims = 2;
    std::vector<Field> fields;
    Iteration iteration = Iteration::Cells;
    std::vector<Statement> body;
    std::optional<Split> split;
    std::map<int, std::vector<Statement>> links;
    std::vector<std::string> payload;

    const Field& field(const std::string& name) const;
    /// Free symbols that are neither assigned in the kernel nor payload
    /// columns, sorted by name.
    std::vector<std::string> parameters() const;
    /// Every statement list of the kernel, in execution order.
    std::vector<const std::vector<Statement>*> statement_lists() const;
};

enum class BoundaryKind { NoSlip, Ubb, Custom };

/// A link-wise boundary condition. The value streamed back into the fluid
/// along the reversed link is a rule in these symbols:
///   f_out           post-collision population leaving the fluid cell
///   w               lattice weight of the link
///   c_0, c_1, c_2   link direction components
///   cs2             squared speed of sound
/// Symbols listed in `payload` are read per link from the index list in
/// INDEX_LIST mode and become kernel parameters otherwise.
struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::NoSlip;
    int flag_id = 1;
    Expr rule;
    std::vector<std::string> payload;
};

struct LowerOptions {
    std::string name = "lbm_kernel";
    /// Boundaries folded into the kernel as per-direction conditionals.
    std::vector<BoundarySpec> compiled_in;
    std::optional<Field> flags;
};

/// Maps pre-collision symbols to reads and post-collision symbols to writes
/// for the given streaming pattern. In-place patterns take a single field.
Kernel lower(const methods::CollisionRule& rule, Pattern pattern, const Field& src, const std::optional<Field>& dst,
             const LowerOptions& opts = {});

/// Density and velocity symbols of the rule.
std::vector<std::string> default_buffered(const methods::CollisionRule& rule);

/// Splits the cell loop into a first loop computing the buffered values and
/// the center direction, then one loop per pair of opposite directions.
Kernel split_inner_loop(const Kernel& k, const lattice::Stencil& s, const std::vector<std::string>& buffered,
                        int block);

/// True if no cell of a sweep touches a location that another cell writes.
bool sweep_independent(const Kernel& k);

}  // namespace lbmc::kernel
