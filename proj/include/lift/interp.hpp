#pragma once

// Concrete, deterministic evaluator for single blocks.
//
// Guest state and memory are sparse: only written bytes are stored. An
// unwritten memory byte at address a reads as low8(mix64(seed, a)); an
// unwritten guest byte at offset o reads as low8(mix64(seed, G + o)). Two
// states built from the same seed therefore see the same "random"
// environment without materializing it.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lift/cost.hpp"
#include "lift/ir.hpp"

namespace lift {

/// SplitMix64 finalizer applied to seed + 0x9E3779B97F4A7C15 * (x + 1).
constexpr std::uint64_t mix64(std::uint64_t seed, std::uint64_t x) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (x + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint32_t kDefaultGuestSize = 4096;

enum class EvalErrorKind : std::uint8_t { DivByZero, OpaqueOp, GuestOutOfRange, UnwrittenTemp };

inline std::string_view eval_error_name(EvalErrorKind k) {
    switch (k) {
        case EvalErrorKind::DivByZero: return "DivByZero";
        case EvalErrorKind::OpaqueOp: return "OpaqueOp";
        case EvalErrorKind::GuestOutOfRange: return "GuestOutOfRange";
        case EvalErrorKind::UnwrittenTemp: return "UnwrittenTemp";
    }
    return "?";
}

class EvalError : public Error {
public:
    EvalError(EvalErrorKind kind, std::string detail, int stmt_index = -1)
        : Error(std::string(eval_error_name(kind)) + (stmt_index >= 0 ? " at stmt " + std::to_string(stmt_index) : "") +
                (detail.empty() ? "" : ": " + detail)),
          kind(kind), stmt_index(stmt_index), detail(std::move(detail)) {}

    EvalErrorKind kind;
    int stmt_index;
    std::string detail;
};

struct MemWrite {
    std::uint64_t addr;
    std::uint8_t byte;
    friend bool operator==(const MemWrite&, const MemWrite&) = default;
};

class MachineState {
public:
    explicit MachineState(std::uint64_t seed = 0, std::uint32_t guest_size = kDefaultGuestSize)
        : seed_(seed), guest_size_(guest_size) {}

    std::uint64_t seed() const { return seed_; }
    std::uint32_t guest_size() const { return guest_size_; }

    std::uint8_t guest_byte(std::uint64_t off) const {
        if (off >= guest_size_) throw EvalError(EvalErrorKind::GuestOutOfRange, "offset " + std::to_string(off));
        if (auto it = guest_.find(static_cast<std::uint32_t>(off)); it != guest_.end()) return it->second;
        return static_cast<std::uint8_t>(mix64(seed_, std::uint64_t{guest_size_} + off));
    }

    std::uint64_t read_guest(std::uint32_t off, Ty t) const {
        check_guest_range(off, t);
        std::uint64_t v = 0;
        for (unsigned i = 0; i < byte_size(t); ++i) v |= std::uint64_t{guest_byte(off + i)} << (8 * i);
        return v & type_mask(t);
    }

    void write_guest(std::uint32_t off, std::uint64_t v, Ty t) {
        check_guest_range(off, t);
        v &= type_mask(t);
        for (unsigned i = 0; i < byte_size(t); ++i) guest_[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }

    std::uint8_t mem_byte(std::uint64_t addr) const {
        if (auto it = mem_.find(addr); it != mem_.end()) return it->second;
        return static_cast<std::uint8_t>(mix64(seed_, addr));
    }

    std::uint64_t read_mem(std::uint64_t addr, Ty t) const {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < byte_size(t); ++i) v |= std::uint64_t{mem_byte(addr + i)} << (8 * i);
        return v & type_mask(t);
    }

    /// Little-endian store; every byte is appended to the write log.
    void write_mem(std::uint64_t addr, std::uint64_t v, Ty t) {
        v &= type_mask(t);
        for (unsigned i = 0; i < byte_size(t); ++i) {
            auto b = static_cast<std::uint8_t>(v >> (8 * i));
            mem_[addr + i] = b;
            writes_.push_back({addr + i, b});
        }
    }

    /// Initial memory contents; not recorded in the write log.
    void preset_mem(std::uint64_t addr, std::uint64_t v, Ty t) {
        v &= type_mask(t);
        for (unsigned i = 0; i < byte_size(t); ++i) mem_[addr + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }

    std::optional<std::uint64_t> temp(TempId t) const {
        if (t < temps_.size()) return temps_[t];
        return std::nullopt;
    }
    void set_temp(TempId t, std::uint64_t v) {
        if (t >= temps_.size()) temps_.resize(std::size_t{t} + 1);
        temps_[t] = v;
    }
    void clear_temps() { temps_.clear(); }

    const std::map<std::uint32_t, std::uint8_t>& guest_written() const { return guest_; }
    const std::map<std::uint64_t, std::uint8_t>& memory_written() const { return mem_; }
    const std::vector<MemWrite>& write_log() const { return writes_; }

    /// Full G-byte guest image (defaults included).
    std::vector<std::uint8_t> guest_image() const {
        std::vector<std::uint8_t> out(guest_size_);
        for (std::uint32_t i = 0; i < guest_size_; ++i) out[i] = guest_byte(i);
        return out;
    }

private:
    void check_guest_range(std::uint64_t off, Ty t) const {
        if (off + byte_size(t) > guest_size_)
            throw EvalError(EvalErrorKind::GuestOutOfRange,
                            "offset " + std::to_string(off) + " size " + std::to_string(byte_size(t)));
    }

    std::uint64_t seed_;
    std::uint32_t guest_size_;
    std::map<std::uint32_t, std::uint8_t> guest_;
    std::map<std::uint64_t, std::uint8_t> mem_;
    std::vector<MemWrite> writes_;
    std::vector<std::optional<std::uint64_t>> temps_;
};

/// First guest offset whose final byte differs, if any.
inline std::optional<std::uint32_t> first_guest_difference(const MachineState& a, const MachineState& b) {
    std::optional<std::uint32_t> first;
    auto consider = [&](std::uint32_t off) {
        if ((!first || off < *first) && a.guest_byte(off) != b.guest_byte(off)) first = off;
    };
    for (const auto& [off, v] : a.guest_written()) consider(off);
    for (const auto& [off, v] : b.guest_written()) consider(off);
    return first;
}

/// First address whose final memory byte differs, if any.
inline std::optional<std::uint64_t> first_memory_difference(const MachineState& a, const MachineState& b) {
    std::optional<std::uint64_t> first;
    auto consider = [&](std::uint64_t addr) {
        if ((!first || addr < *first) && a.mem_byte(addr) != b.mem_byte(addr)) first = addr;
    };
    for (const auto& [addr, v] : a.memory_written()) consider(addr);
    for (const auto& [addr, v] : b.memory_written()) consider(addr);
    return first;
}

// ---------------------------------------------------------------------------
// Operation semantics (fixed width, two's complement)
// ---------------------------------------------------------------------------

inline std::int64_t sign_extend(std::uint64_t v, Ty t) {
    const unsigned w = bit_width(t);
    if (w == 64) return static_cast<std::int64_t>(v);
    const std::uint64_t sign = std::uint64_t{1} << (w - 1);
    v &= type_mask(t);
    return static_cast<std::int64_t>((v ^ sign) - sign);
}

/// Binary op over already-masked operands. nullopt on division by zero.
inline std::optional<std::uint64_t> apply_binop(Op op, std::uint64_t a, std::uint64_t b) {
    const Ty w = op.width;
    const std::uint64_t m = type_mask(w);
    const unsigned bits = bit_width(w);
    switch (op.kind) {
        case OpKind::Add: return (a + b) & m;
        case OpKind::Sub: return (a - b) & m;
        case OpKind::Mul: return (a * b) & m;
        case OpKind::And: return a & b & m;
        case OpKind::Or: return (a | b) & m;
        case OpKind::Xor: return (a ^ b) & m;
        case OpKind::Shl: return b >= bits ? 0 : (a << b) & m;
        case OpKind::Shr: return b >= bits ? 0 : (a & m) >> b;
        case OpKind::Sar: {
            const std::int64_t s = sign_extend(a, w);
            const unsigned sh = b >= bits ? bits - 1 : static_cast<unsigned>(b);
            return static_cast<std::uint64_t>(s >> sh) & m;
        }
        case OpKind::DivU:
            if (b == 0) return std::nullopt;
            return (a / b) & m;
        case OpKind::DivS: {
            if (b == 0) return std::nullopt;
            const std::int64_t x = sign_extend(a, w), y = sign_extend(b, w);
            if (x == INT64_MIN && y == -1) return static_cast<std::uint64_t>(INT64_MIN) & m;
            return static_cast<std::uint64_t>(x / y) & m;
        }
        case OpKind::CmpEQ: return a == b ? 1 : 0;
        case OpKind::CmpNE: return a != b ? 1 : 0;
        case OpKind::CmpLTU: return a < b ? 1 : 0;
        case OpKind::CmpLEU: return a <= b ? 1 : 0;
        case OpKind::CmpLTS: return sign_extend(a, w) < sign_extend(b, w) ? 1 : 0;
        case OpKind::CmpLES: return sign_extend(a, w) <= sign_extend(b, w) ? 1 : 0;
        default: return std::nullopt;
    }
}

inline std::uint64_t apply_unop(Op op, std::uint64_t a) {
    switch (op.kind) {
        case OpKind::Not: return ~a & type_mask(op.width);
        case OpKind::WidenU: return a & type_mask(op.width);
        case OpKind::WidenS: return static_cast<std::uint64_t>(sign_extend(a, op.width));
        case OpKind::Narrow: return a & type_mask(op.width);
        default: return a;
    }
}

/// Evaluates an expression. Reads never change the state.
inline std::uint64_t eval_expr(const MachineState& st, const ExprPtr& e) {
    return std::visit(
        [&](const auto& n) -> std::uint64_t {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, Const>) {
                return n.value & type_mask(n.type);
            } else if constexpr (std::is_same_v<N, RdTmp>) {
                auto v = st.temp(n.tmp);
                if (!v) throw EvalError(EvalErrorKind::UnwrittenTemp, "t" + std::to_string(n.tmp));
                return *v;
            } else if constexpr (std::is_same_v<N, Get>) {
                return st.read_guest(n.offset, n.type);
            } else if constexpr (std::is_same_v<N, Load>) {
                return st.read_mem(eval_expr(st, n.addr), n.type);
            } else if constexpr (std::is_same_v<N, Binop>) {
                auto a = eval_expr(st, n.lhs);
                auto b = eval_expr(st, n.rhs);
                auto r = apply_binop(n.op, a, b);
                if (!r) throw EvalError(EvalErrorKind::DivByZero, op_name(n.op));
                return *r;
            } else if constexpr (std::is_same_v<N, Unop>) {
                return apply_unop(n.op, eval_expr(st, n.arg));
            } else if constexpr (std::is_same_v<N, Ite>) {
                return (eval_expr(st, n.cond) & 1) ? eval_expr(st, n.ift) : eval_expr(st, n.iff);
            } else {
                throw EvalError(EvalErrorKind::OpaqueOp, n.name);
            }
        },
        e->node);
}

// ---------------------------------------------------------------------------
// Block execution
// ---------------------------------------------------------------------------

struct ExitOutcome {
    enum class Kind : std::uint8_t { SideExit, FallThrough };
    Kind kind = Kind::FallThrough;
    std::size_t stmt_index = 0;  // meaningful for SideExit only
    std::uint64_t target = 0;
    JumpKind jumpkind = JumpKind::Boring;

    friend bool operator==(const ExitOutcome&, const ExitOutcome&) = default;
};

inline std::string describe(const ExitOutcome& e) {
    std::string s = e.kind == ExitOutcome::Kind::SideExit ? "SideExit(" + std::to_string(e.stmt_index) + ")"
                                                           : std::string("FallThrough");
    return s + " -> " + std::to_string(e.target) + " Ijk_" + std::string(jumpkind_name(e.jumpkind));
}

struct ExecResult {
    ExitOutcome exit;
    CostUnits cost = 0;
};

namespace detail {

inline std::uint64_t eval_at(const MachineState& st, const ExprPtr& e, int idx) {
    try {
        return eval_expr(st, e);
    } catch (const EvalError& err) {
        throw EvalError(err.kind, err.detail, idx);
    }
}

}  // namespace detail

/// Runs one block in place. A taken side exit stops execution; the cost is
/// the weight sum of the statements that ran (the taken Exit included).
inline ExecResult execute(MachineState& st, const IrSb& block, const WeightTable& w = {}) {
    st.clear_temps();
    ExecResult res;
    for (std::size_t i = 0; i < block.stmts.size(); ++i) {
        const int idx = static_cast<int>(i);
        const auto& s = block.stmts[i];
        res.cost += statement_cost(s, w);
        if (const auto* wr = std::get_if<WrTmp>(&s)) {
            st.set_temp(wr->tmp, detail::eval_at(st, wr->rhs, idx));
        } else if (const auto* put = std::get_if<Put>(&s)) {
            auto v = detail::eval_at(st, put->rhs, idx);
            auto t = type_of(put->rhs, block.temps).value_or(Ty::I64);
            try {
                st.write_guest(put->offset, v, t);
            } catch (const EvalError& err) {
                throw EvalError(err.kind, err.detail, idx);
            }
        } else if (const auto* store = std::get_if<Store>(&s)) {
            auto a = detail::eval_at(st, store->addr, idx);
            auto v = detail::eval_at(st, store->data, idx);
            st.write_mem(a, v, type_of(store->data, block.temps).value_or(Ty::I64));
        } else if (const auto* ex = std::get_if<Exit>(&s)) {
            if (detail::eval_at(st, ex->guard, idx) & 1) {
                res.exit = {ExitOutcome::Kind::SideExit, i, ex->target, ex->jumpkind};
                return res;
            }
        }
    }
    res.exit = {ExitOutcome::Kind::FallThrough, 0, detail::eval_at(st, block.next, -1), block.next_jumpkind};
    return res;
}

}  // namespace lift
