#include "lbmc/kernel/kernel.hpp"

#include <algorithm>
#include <set>

#include "lbmc/error.hpp"
#include "lbmc/kernel/boundary.hpp"

namespace lbmc::kernel {

namespace {

Offset vec(const lattice::Vec& v) { return {v[0], v[1], v[2]}; }
Offset neg(const Offset& o) { return {-o[0], -o[1], -o[2]}; }
Offset positive_part(const Offset& o) { return {std::max(o[0], 0), std::max(o[1], 0), std::max(o[2], 0)}; }

std::set<std::string> assigned_symbols(const std::vector<Statement>& body) {
    std::set<std::string> out;
    for (const auto& st : body)
        if (st.target.is_symbol()) out.insert(st.target.name());
    return out;
}

}  // namespace

Expr access(const Field& f, const Offset& offset, int index) {
    if (index < 0 || index >= f.index_size)
        throw ConfigError("index " + std::to_string(index) + " out of range for field '" + f.name + "'");
    return Expr::indexed(f.name, offset, index);
}

std::string pattern_name(Pattern p) {
    switch (p) {
        case Pattern::Pull: return "pull";
        case Pattern::Push: return "push";
        case Pattern::CollideOnly: return "collide_only";
        case Pattern::AaEven: return "aa_even";
        case Pattern::AaOdd: return "aa_odd";
        case Pattern::EsoEven: return "eso_even";
        case Pattern::EsoOdd: return "eso_odd";
    }
    return "";
}

Pattern parse_pattern(const std::string& name) {
    for (Pattern p : {Pattern::Pull, Pattern::Push, Pattern::CollideOnly, Pattern::AaEven, Pattern::AaOdd,
                      Pattern::EsoEven, Pattern::EsoOdd})
        if (pattern_name(p) == name) return p;
    throw ConfigError("unknown streaming pattern '" + name + "'");
}

bool in_place(Pattern p) { return p != Pattern::Pull && p != Pattern::Push; }

Pattern predecessor(Pattern p) {
    switch (p) {
        case Pattern::AaEven: return Pattern::AaOdd;
        case Pattern::AaOdd: return Pattern::AaEven;
        case Pattern::EsoEven: return Pattern::EsoOdd;
        case Pattern::EsoOdd: return Pattern::EsoEven;
        default: return p;
    }
}

Slot read_slot(const lattice::Stencil& s, Pattern p, int q) {
    const Offset c = vec(s.c[static_cast<std::size_t>(q)]);
    const int qb = s.opposite(q);
    switch (p) {
        case Pattern::Pull: return {neg(c), q};
        case Pattern::Push:
        case Pattern::CollideOnly:
        case Pattern::AaEven: return {{0, 0, 0}, q};
        case Pattern::AaOdd: return {neg(c), qb};
        case Pattern::EsoEven: return {positive_part(neg(c)), q};
        case Pattern::EsoOdd: return {positive_part(neg(c)), qb};
    }
    return {};
}

Slot write_slot(const lattice::Stencil& s, Pattern p, int q) {
    const Offset c = vec(s.c[static_cast<std::size_t>(q)]);
    const int qb = s.opposite(q);
    switch (p) {
        case Pattern::Pull:
        case Pattern::CollideOnly: return {{0, 0, 0}, q};
        case Pattern::Push:
        case Pattern::AaOdd: return {c, q};
        case Pattern::AaEven: return {{0, 0, 0}, qb};
        case Pattern::EsoEven: return {positive_part(c), qb};
        case Pattern::EsoOdd: return {positive_part(c), q};
    }
    return {};
}

const Field& Kernel::field(const std::string& n) const {
    for (const auto& f : fields)
        if (f.name == n) return f;
    throw ConfigError("kernel '" + name + "' has no field '" + n + "'");
}

std::vector<const std::vector<Statement>*> Kernel::statement_lists() const {
    std::vector<const std::vector<Statement>*> out;
    if (iteration == Iteration::IndexList) {
        for (const auto& [d, b] : links) out.push_back(&b);
    } else if (split) {
        for (const auto& l : split->loops) out.push_back(&l);
    } else {
        out.push_back(&body);
    }
    return out;
}

std::vector<std::string> Kernel::parameters() const {
    std::set<std::string> assigned(payload.begin(), payload.end());
    std::set<std::string> used;
    for (const auto* list : statement_lists()) {
        for (const auto& st : *list) {
            if (st.target.is_symbol()) assigned.insert(st.target.name());
            for (const auto& leaf : sym::free_symbols(st.value))
                if (leaf.is_symbol()) used.insert(leaf.name());
        }
    }
    std::vector<std::string> out;
    for (const auto& u : used)
        if (!assigned.count(u)) out.push_back(u);
    return out;
}

Kernel lower(const methods::CollisionRule& rule, Pattern pattern, const Field& src, const std::optional<Field>& dst,
             const LowerOptions& opts) {
    const auto& s = rule.stencil;
    if (in_place(pattern) && dst && dst->name != src.name)
        throw ConfigError("pattern " + pattern_name(pattern) + " works in place and takes a single field");
    if (!in_place(pattern) && (!dst || dst->name == src.name))
        throw ConfigError("pattern " + pattern_name(pattern) + " needs distinct source and destination fields");
    for (const Field* f : {&src, dst ? &*dst : nullptr}) {
        if (f == nullptr) continue;
        if (f->index_size != s.q || f->dims != s.d)
            throw ConfigError("field '" + f->name + "' does not match stencil " + s.name);
    }
    if (static_cast<int>(rule.outputs.size()) != s.q || static_cast<int>(rule.pre.size()) != s.q)
        throw ConfigError("collision rule does not have one output per direction");

    Kernel k;
    k.name = opts.name;
    k.dims = s.d;
    k.fields.push_back(src);
    const Field& out = in_place(pattern) ? src : *dst;
    if (!in_place(pattern)) k.fields.push_back(*dst);

    if (!opts.compiled_in.empty()) {
        if (pattern == Pattern::CollideOnly)
            throw ConfigError("boundaries cannot be compiled into a collide-only kernel");
        if (!opts.flags) throw ConfigError("compiled-in boundaries need a flag field");
        k.fields.push_back(*opts.flags);
    }

    const Pattern prev = predecessor(pattern);
    for (int q = 0; q < s.q; ++q) {
        Slot r = read_slot(s, pattern, q);
        k.body.push_back({rule.pre[static_cast<std::size_t>(q)], access(src, r.offset, r.index), std::nullopt});
        const Offset c = vec(s.c[static_cast<std::size_t>(q)]);
        if (c == Offset{0, 0, 0}) continue;
        // Population q enters the cell from x - c_q. If that is a wall, it is
        // the reflected post-collision value of this cell along q-bar.
        const int qb = s.opposite(q);
        const Slot back = write_slot(s, prev, qb);
        for (const auto& bc : opts.compiled_in) {
            Expr value = link_value(bc, s, qb, access(src, back.offset, back.index));
            k.body.push_back({rule.pre[static_cast<std::size_t>(q)], value,
                              Guard{access(*opts.flags, neg(c), 0), bc.flag_id}});
        }
    }
    for (const auto& a : rule.subexpressions) k.body.push_back({a.target, a.value, std::nullopt});
    for (int q = 0; q < s.q; ++q) {
        Slot w = write_slot(s, pattern, q);
        k.body.push_back({access(out, w.offset, w.index), rule.outputs[static_cast<std::size_t>(q)].value,
                          std::nullopt});
    }
    return k;
}

std::vector<std::string> default_buffered(const methods::CollisionRule& rule) {
    std::vector<std::string> out;
    if (rule.density.is_symbol()) out.push_back(rule.density.name());
    for (const auto& u : rule.velocity)
        if (u.is_symbol()) out.push_back(u.name());
    return out;
}

namespace {

using SlotKey = std::tuple<std::string, Offset, int>;

struct AccessSets {
    std::set<SlotKey> reads, writes;
};

AccessSets access_sets(const std::vector<Statement>& body) {
    AccessSets a;
    for (const auto& st : body) {
        std::vector<Expr> leaves;
        sym::collect_leaves(st.value, leaves);
        if (st.guard) leaves.push_back(st.guard->flag);
        for (const auto& l : leaves)
            if (l.is_indexed()) a.reads.insert({l.name(), l.offset(), l.index()});
        if (st.target.is_indexed()) a.writes.insert({st.target.name(), st.target.offset(), st.target.index()});
    }
    return a;
}

}  // namespace

Kernel split_inner_loop(const Kernel& k, const lattice::Stencil& s, const std::vector<std::string>& buffered,
                        int block) {
    if (k.iteration != Iteration::Cells || k.split) throw ConfigError("only plain cell kernels can be split");
    if (block < 1) throw ConfigError("line block length must be positive");
    const auto& body = k.body;
    auto assigned = assigned_symbols(body);
    std::set<std::string> buf(buffered.begin(), buffered.end());
    for (const auto& b : buffered)
        if (!assigned.count(b)) throw ConfigError("buffered symbol '" + b + "' is not computed by the kernel");
    // A buffered value may only depend on statements that precede it.
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (!body[i].target.is_symbol() || !buf.count(body[i].target.name())) continue;
        std::set<std::string> earlier;
        for (std::size_t j = 0; j < i; ++j)
            if (body[j].target.is_symbol()) earlier.insert(body[j].target.name());
        for (const auto& leaf : sym::free_symbols(body[i].value))
            if (leaf.is_symbol() && assigned.count(leaf.name()) && !earlier.count(leaf.name()))
                throw ConfigError("buffered symbol '" + body[i].target.name() + "' depends on later value '" +
                                  leaf.name() + "'");
    }

    // Statements needed for a set of seeds, stopping at buffered symbols
    // unless `through_buffers` is set.
    auto closure = [&](std::vector<std::size_t> seeds, bool through_buffers) {
        std::vector<bool> keep(body.size(), false);
        std::vector<std::string> work;
        auto need_symbol = [&](const std::string& n) {
            if (!through_buffers && buf.count(n)) return;
            work.push_back(n);
        };
        auto need_stmt = [&](std::size_t i) {
            if (keep[i]) return;
            keep[i] = true;
            for (const auto& leaf : sym::free_symbols(body[i].value))
                if (leaf.is_symbol()) need_symbol(leaf.name());
        };
        for (auto i : seeds) need_stmt(i);
        std::set<std::string> done;
        while (!work.empty()) {
            std::string n = work.back();
            work.pop_back();
            if (!done.insert(n).second) continue;
            for (std::size_t i = 0; i < body.size(); ++i)
                if (body[i].target.is_symbol() && body[i].target.name() == n) need_stmt(i);
        }
        std::vector<Statement> out;
        for (std::size_t i = 0; i < body.size(); ++i)
            if (keep[i]) out.push_back(body[i]);
        return out;
    };

    std::map<int, std::vector<std::size_t>> writes_by_slot;
    for (std::size_t i = 0; i < body.size(); ++i)
        if (body[i].target.is_indexed()) writes_by_slot[body[i].target.index()].push_back(i);

    Split sp;
    sp.block = block;
    sp.buffered = buffered;
    {
        std::vector<std::size_t> seeds;
        for (std::size_t i = 0; i < body.size(); ++i)
            if (body[i].target.is_symbol() && buf.count(body[i].target.name())) seeds.push_back(i);
        for (int q = 0; q < s.q; ++q)
            if (s.opposite(q) == q)
                for (auto i : writes_by_slot[q]) seeds.push_back(i);
        // Loop 0 computes the buffered values themselves, so it follows
        // dependencies through them.
        auto loop0 = closure(seeds, true);
        sp.loops.push_back(loop0);
    }
    for (int q = 0; q < s.q; ++q) {
        int qb = s.opposite(q);
        if (qb <= q) continue;
        std::vector<std::size_t> seeds = writes_by_slot[q];
        seeds.insert(seeds.end(), writes_by_slot[qb].begin(), writes_by_slot[qb].end());
        sp.loops.push_back(closure(seeds, false));
    }

    // In-place kernels must not read a slot that an earlier loop of the same
    // cell already overwrote.
    std::set<SlotKey> written;
    for (const auto& loop : sp.loops) {
        auto a = access_sets(loop);
        for (const auto& r : a.reads)
            if (written.count(r))
                throw ConfigError("loop splitting would read a population after it was overwritten");
        written.insert(a.writes.begin(), a.writes.end());
    }

    Kernel out = k;
    out.body.clear();
    out.split = std::move(sp);
    return out;
}

bool sweep_independent(const Kernel& k) {
    if (k.iteration != Iteration::Cells) return true;
    AccessSets all;
    for (const auto* list : k.statement_lists()) {
        auto a = access_sets(*list);
        all.reads.insert(a.reads.begin(), a.reads.end());
        all.writes.insert(a.writes.begin(), a.writes.end());
    }
    for (const auto& [fw, ow, iw] : all.writes) {
        for (const auto* set : {&all.reads, &all.writes}) {
            for (const auto& [f, o, i] : *set)
                if (f == fw && i == iw && o != ow) return false;
        }
    }
    return true;
}

}  // namespace lbmc::kernel
