#pragma once

// Data model for the textual VEX-dialect IR: typed expressions, the six
// statement kinds, super-blocks (IRSBs) and whole programs, plus the
// well-formedness checker used by every stage that produces IR.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lift {

/// Base class for every error thrown by the toolchain.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

enum class Ty : std::uint8_t { I1, I8, I16, I32, I64 };

constexpr unsigned bit_width(Ty t) {
    switch (t) {
        case Ty::I1: return 1;
        case Ty::I8: return 8;
        case Ty::I16: return 16;
        case Ty::I32: return 32;
        case Ty::I64: return 64;
    }
    return 64;
}

/// Bytes occupied in guest state or memory; I1 occupies one byte.
constexpr unsigned byte_size(Ty t) { return t == Ty::I1 ? 1 : bit_width(t) / 8; }

constexpr std::uint64_t type_mask(Ty t) {
    return t == Ty::I64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bit_width(t)) - 1;
}

constexpr bool fits(std::uint64_t v, Ty t) { return (v & ~type_mask(t)) == 0; }

inline std::string_view type_name(Ty t) {
    switch (t) {
        case Ty::I1: return "I1";
        case Ty::I8: return "I8";
        case Ty::I16: return "I16";
        case Ty::I32: return "I32";
        case Ty::I64: return "I64";
    }
    return "?";
}

inline std::optional<Ty> parse_type_name(std::string_view s) {
    if (s == "I1") return Ty::I1;
    if (s == "I8") return Ty::I8;
    if (s == "I16") return Ty::I16;
    if (s == "I32") return Ty::I32;
    if (s == "I64") return Ty::I64;
    return std::nullopt;
}

inline std::optional<Ty> type_for_width(unsigned bits) {
    switch (bits) {
        case 1: return Ty::I1;
        case 8: return Ty::I8;
        case 16: return Ty::I16;
        case 32: return Ty::I32;
        case 64: return Ty::I64;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Operations (normative signature table)
// ---------------------------------------------------------------------------

enum class OpKind : std::uint8_t {
    Add, Sub, Mul, And, Or, Xor, Shl, Shr, Sar,
    DivU, DivS,
    CmpEQ, CmpNE, CmpLTS, CmpLTU, CmpLES, CmpLEU,
    Not,
    WidenU,   // nUto64
    WidenS,   // nSto64
    Narrow,   // 64ton
};

/// `width` is the operand width for arithmetic, comparisons and Not, the
/// source width for widenings and the destination width for narrowings.
struct Op {
    OpKind kind;
    Ty width;

    friend bool operator==(const Op&, const Op&) = default;
};

struct OpSignature {
    std::vector<Ty> args;
    Ty result;
};

namespace detail {

inline bool is_arith_width(Ty t) { return t != Ty::I1; }

inline std::string_view kind_stem(OpKind k) {
    switch (k) {
        case OpKind::Add: return "Add";
        case OpKind::Sub: return "Sub";
        case OpKind::Mul: return "Mul";
        case OpKind::And: return "And";
        case OpKind::Or: return "Or";
        case OpKind::Xor: return "Xor";
        case OpKind::Shl: return "Shl";
        case OpKind::Shr: return "Shr";
        case OpKind::Sar: return "Sar";
        case OpKind::DivU: return "DivU";
        case OpKind::DivS: return "DivS";
        case OpKind::CmpEQ: return "CmpEQ";
        case OpKind::CmpNE: return "CmpNE";
        case OpKind::CmpLTS: return "CmpLT";
        case OpKind::CmpLTU: return "CmpLT";
        case OpKind::CmpLES: return "CmpLE";
        case OpKind::CmpLEU: return "CmpLE";
        case OpKind::Not: return "Not";
        default: return "";
    }
}

}  // namespace detail

inline bool is_valid_op(Op op) {
    switch (op.kind) {
        case OpKind::Add: case OpKind::Sub: case OpKind::Mul: case OpKind::And:
        case OpKind::Or: case OpKind::Xor: case OpKind::Shl: case OpKind::Shr:
        case OpKind::Sar: case OpKind::CmpEQ: case OpKind::CmpNE:
            return detail::is_arith_width(op.width);
        case OpKind::DivU: case OpKind::DivS:
        case OpKind::CmpLTS: case OpKind::CmpLTU: case OpKind::CmpLES: case OpKind::CmpLEU:
            return op.width == Ty::I64;
        case OpKind::Not:
            return true;
        case OpKind::WidenU:
            return op.width == Ty::I1 || op.width == Ty::I8 || op.width == Ty::I32;
        case OpKind::WidenS:
            return op.width == Ty::I32;
        case OpKind::Narrow:
            return op.width == Ty::I32 || op.width == Ty::I8 || op.width == Ty::I1;
    }
    return false;
}

inline bool is_unary(OpKind k) {
    return k == OpKind::Not || k == OpKind::WidenU || k == OpKind::WidenS || k == OpKind::Narrow;
}

inline bool is_compare(OpKind k) {
    return k == OpKind::CmpEQ || k == OpKind::CmpNE || k == OpKind::CmpLTS ||
           k == OpKind::CmpLTU || k == OpKind::CmpLES || k == OpKind::CmpLEU;
}

inline bool is_shift(OpKind k) { return k == OpKind::Shl || k == OpKind::Shr || k == OpKind::Sar; }

inline OpSignature signature(Op op) {
    switch (op.kind) {
        case OpKind::Shl: case OpKind::Shr: case OpKind::Sar:
            return {{op.width, Ty::I8}, op.width};
        case OpKind::Not:
            return {{op.width}, op.width};
        case OpKind::WidenU: case OpKind::WidenS:
            return {{op.width}, Ty::I64};
        case OpKind::Narrow:
            return {{Ty::I64}, op.width};
        default:
            if (is_compare(op.kind)) return {{op.width, op.width}, Ty::I1};
            return {{op.width, op.width}, op.width};
    }
}

inline std::string op_name(Op op) {
    const std::string w = std::to_string(bit_width(op.width));
    switch (op.kind) {
        case OpKind::WidenU: return w + "Uto64";
        case OpKind::WidenS: return w + "Sto64";
        case OpKind::Narrow: return "64to" + w;
        case OpKind::CmpLTS: case OpKind::CmpLES: return std::string(detail::kind_stem(op.kind)) + w + "S";
        case OpKind::CmpLTU: case OpKind::CmpLEU: return std::string(detail::kind_stem(op.kind)) + w + "U";
        default: return std::string(detail::kind_stem(op.kind)) + w;
    }
}

/// Looks a name up in the signature table; names outside it are Opaque.
inline std::optional<Op> parse_op(std::string_view name) {
    static const std::map<std::string, Op, std::less<>> table = [] {
        std::map<std::string, Op, std::less<>> m;
        constexpr OpKind kinds[] = {
            OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::And, OpKind::Or, OpKind::Xor,
            OpKind::Shl, OpKind::Shr, OpKind::Sar, OpKind::DivU, OpKind::DivS,
            OpKind::CmpEQ, OpKind::CmpNE, OpKind::CmpLTS, OpKind::CmpLTU, OpKind::CmpLES,
            OpKind::CmpLEU, OpKind::Not, OpKind::WidenU, OpKind::WidenS, OpKind::Narrow};
        constexpr Ty widths[] = {Ty::I1, Ty::I8, Ty::I16, Ty::I32, Ty::I64};
        for (OpKind k : kinds)
            for (Ty w : widths)
                if (Op op{k, w}; is_valid_op(op)) m.emplace(op_name(op), op);
        return m;
    }();
    if (auto it = table.find(name); it != table.end()) return it->second;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

using TempId = std::uint32_t;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

bool same_expr(const ExprPtr& a, const ExprPtr& b);

struct Const {
    std::uint64_t value;
    Ty type;
    friend bool operator==(const Const&, const Const&) = default;
};

struct RdTmp {
    TempId tmp;
    friend bool operator==(const RdTmp&, const RdTmp&) = default;
};

struct Get {
    std::uint32_t offset;
    Ty type;
    friend bool operator==(const Get&, const Get&) = default;
};

struct Load {
    Ty type;
    ExprPtr addr;
    friend bool operator==(const Load& a, const Load& b) {
        return a.type == b.type && same_expr(a.addr, b.addr);
    }
};

struct Binop {
    Op op;
    ExprPtr lhs;
    ExprPtr rhs;
    friend bool operator==(const Binop& a, const Binop& b) {
        return a.op == b.op && same_expr(a.lhs, b.lhs) && same_expr(a.rhs, b.rhs);
    }
};

struct Unop {
    Op op;
    ExprPtr arg;
    friend bool operator==(const Unop& a, const Unop& b) {
        return a.op == b.op && same_expr(a.arg, b.arg);
    }
};

struct Ite {
    ExprPtr cond;
    ExprPtr ift;
    ExprPtr iff;
    friend bool operator==(const Ite& a, const Ite& b) {
        return same_expr(a.cond, b.cond) && same_expr(a.ift, b.ift) && same_expr(a.iff, b.iff);
    }
};

/// An operation outside the signature table, kept verbatim.
struct Opaque {
    std::string name;
    std::vector<ExprPtr> args;
    friend bool operator==(const Opaque& a, const Opaque& b) {
        if (a.name != b.name || a.args.size() != b.args.size()) return false;
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!same_expr(a.args[i], b.args[i])) return false;
        return true;
    }
};

struct Expr {
    std::variant<Const, RdTmp, Get, Load, Binop, Unop, Ite, Opaque> node;

    template <class T> const T* as() const { return std::get_if<T>(&node); }
    template <class T> bool is() const { return std::holds_alternative<T>(node); }

    friend bool operator==(const Expr&, const Expr&) = default;
};

inline bool same_expr(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return *a == *b;
}

inline ExprPtr mk_const(std::uint64_t v, Ty t) { return std::make_shared<const Expr>(Expr{Const{v & type_mask(t), t}}); }
inline ExprPtr mk_tmp(TempId t) { return std::make_shared<const Expr>(Expr{RdTmp{t}}); }
inline ExprPtr mk_get(std::uint32_t off, Ty t) { return std::make_shared<const Expr>(Expr{Get{off, t}}); }
inline ExprPtr mk_load(Ty t, ExprPtr addr) { return std::make_shared<const Expr>(Expr{Load{t, std::move(addr)}}); }
inline ExprPtr mk_binop(Op op, ExprPtr a, ExprPtr b) {
    return std::make_shared<const Expr>(Expr{Binop{op, std::move(a), std::move(b)}});
}
inline ExprPtr mk_unop(Op op, ExprPtr a) { return std::make_shared<const Expr>(Expr{Unop{op, std::move(a)}}); }
inline ExprPtr mk_ite(ExprPtr c, ExprPtr t, ExprPtr f) {
    return std::make_shared<const Expr>(Expr{Ite{std::move(c), std::move(t), std::move(f)}});
}
inline ExprPtr mk_opaque(std::string name, std::vector<ExprPtr> args) {
    return std::make_shared<const Expr>(Expr{Opaque{std::move(name), std::move(args)}});
}

/// Pre-order walk over an expression tree.
inline void walk(const ExprPtr& e, const std::function<void(const Expr&)>& fn) {
    if (!e) return;
    fn(*e);
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, Load>) {
                walk(n.addr, fn);
            } else if constexpr (std::is_same_v<N, Binop>) {
                walk(n.lhs, fn);
                walk(n.rhs, fn);
            } else if constexpr (std::is_same_v<N, Unop>) {
                walk(n.arg, fn);
            } else if constexpr (std::is_same_v<N, Ite>) {
                walk(n.cond, fn);
                walk(n.ift, fn);
                walk(n.iff, fn);
            } else if constexpr (std::is_same_v<N, Opaque>) {
                for (const auto& a : n.args) walk(a, fn);
            }
        },
        e->node);
}

inline bool expr_contains(const ExprPtr& e, const std::function<bool(const Expr&)>& pred) {
    bool found = false;
    walk(e, [&](const Expr& x) { found = found || pred(x); });
    return found;
}

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

enum class JumpKind : std::uint8_t { Boring, Call, Ret };

inline std::string_view jumpkind_name(JumpKind k) {
    switch (k) {
        case JumpKind::Boring: return "Boring";
        case JumpKind::Call: return "Call";
        case JumpKind::Ret: return "Ret";
    }
    return "Boring";
}

inline std::optional<JumpKind> parse_jumpkind(std::string_view s) {
    if (s == "Boring") return JumpKind::Boring;
    if (s == "Call") return JumpKind::Call;
    if (s == "Ret") return JumpKind::Ret;
    return std::nullopt;
}

/// Default guest offset of the program counter used by NEXT and exits.
inline constexpr std::uint32_t kDefaultPcOffset = 184;

struct IMark {
    std::uint64_t addr;
    std::uint32_t len;
    std::int32_t delta;
    friend bool operator==(const IMark&, const IMark&) = default;
};

struct WrTmp {
    TempId tmp;
    ExprPtr rhs;
    friend bool operator==(const WrTmp& a, const WrTmp& b) { return a.tmp == b.tmp && same_expr(a.rhs, b.rhs); }
};

struct Put {
    std::uint32_t offset;
    ExprPtr rhs;
    friend bool operator==(const Put& a, const Put& b) { return a.offset == b.offset && same_expr(a.rhs, b.rhs); }
};

struct Store {
    ExprPtr addr;
    ExprPtr data;
    friend bool operator==(const Store& a, const Store& b) {
        return same_expr(a.addr, b.addr) && same_expr(a.data, b.data);
    }
};

struct Exit {
    ExprPtr guard;
    std::uint64_t target;
    JumpKind jumpkind = JumpKind::Boring;
    std::uint32_t pc_offset = kDefaultPcOffset;
    friend bool operator==(const Exit& a, const Exit& b) {
        return same_expr(a.guard, b.guard) && a.target == b.target && a.jumpkind == b.jumpkind &&
               a.pc_offset == b.pc_offset;
    }
};

struct NoOp {
    friend bool operator==(const NoOp&, const NoOp&) = default;
};

using Statement = std::variant<IMark, WrTmp, Put, Store, Exit, NoOp>;

enum class StmtKind : std::uint8_t { IMark, WrTmp, Put, Store, Exit, NoOp };

inline StmtKind kind_of(const Statement& s) { return static_cast<StmtKind>(s.index()); }

inline std::string_view stmt_kind_name(StmtKind k) {
    switch (k) {
        case StmtKind::IMark: return "IMark";
        case StmtKind::WrTmp: return "WrTmp";
        case StmtKind::Put: return "Put";
        case StmtKind::Store: return "Store";
        case StmtKind::Exit: return "Exit";
        case StmtKind::NoOp: return "NoOp";
    }
    return "?";
}

/// IMark and NoOp carry no semantics and are never rewrite targets.
inline bool is_metadata(const Statement& s) {
    return std::holds_alternative<IMark>(s) || std::holds_alternative<NoOp>(s);
}

/// Expression roots of a statement in evaluation order.
inline std::vector<ExprPtr> expr_roots(const Statement& s) {
    return std::visit(
        [](const auto& n) -> std::vector<ExprPtr> {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, WrTmp>) return {n.rhs};
            else if constexpr (std::is_same_v<N, Put>) return {n.rhs};
            else if constexpr (std::is_same_v<N, Store>) return {n.addr, n.data};
            else if constexpr (std::is_same_v<N, Exit>) return {n.guard};
            else return {};
        },
        s);
}

inline void walk(const Statement& s, const std::function<void(const Expr&)>& fn) {
    for (const auto& root : expr_roots(s)) walk(root, fn);
}

inline void collect_reads(const ExprPtr& e, std::set<TempId>& out) {
    walk(e, [&](const Expr& x) {
        if (const auto* r = x.as<RdTmp>()) out.insert(r->tmp);
    });
}

inline std::set<TempId> temps_read(const Statement& s) {
    std::set<TempId> out;
    for (const auto& root : expr_roots(s)) collect_reads(root, out);
    return out;
}

// ---------------------------------------------------------------------------
// Blocks and programs
// ---------------------------------------------------------------------------

using TempTypes = std::map<TempId, Ty>;

struct IrSb {
    std::uint64_t addr = 0;
    TempTypes temps;
    std::vector<Statement> stmts;
    ExprPtr next;
    JumpKind next_jumpkind = JumpKind::Boring;
    std::uint32_t next_pc_offset = kDefaultPcOffset;

    friend bool operator==(const IrSb& a, const IrSb& b) {
        return a.addr == b.addr && a.temps == b.temps && a.stmts == b.stmts && same_expr(a.next, b.next) &&
               a.next_jumpkind == b.next_jumpkind && a.next_pc_offset == b.next_pc_offset;
    }
};

struct Program {
    std::string name;
    std::map<std::uint64_t, IrSb> blocks;

    friend bool operator==(const Program& a, const Program& b) { return a.blocks == b.blocks; }
};

/// Temps that appear anywhere in the block (written, read, or in NEXT).
inline std::set<TempId> referenced_temps(const IrSb& b) {
    std::set<TempId> out;
    for (const auto& s : b.stmts) {
        if (const auto* w = std::get_if<WrTmp>(&s)) out.insert(w->tmp);
        for (const auto& root : expr_roots(s)) collect_reads(root, out);
    }
    collect_reads(b.next, out);
    return out;
}

/// Temps read by any statement or by NEXT.
inline std::set<TempId> read_temps(const IrSb& b) {
    std::set<TempId> out;
    for (const auto& s : b.stmts)
        for (const auto& root : expr_roots(s)) collect_reads(root, out);
    collect_reads(b.next, out);
    return out;
}

inline bool contains_opaque(const IrSb& b) {
    auto pred = [](const Expr& x) { return x.is<Opaque>(); };
    for (const auto& s : b.stmts)
        for (const auto& root : expr_roots(s))
            if (expr_contains(root, pred)) return true;
    return expr_contains(b.next, pred);
}

// ---------------------------------------------------------------------------
// Typing and validation
// ---------------------------------------------------------------------------

enum class Rule : std::uint8_t {
    ReadBeforeWrite,
    MultipleWrite,
    UndeclaredTemp,
    TypeMismatch,
    ConstOutOfRange,
    GuardNotI1,
    AddressNotI64,
    NextNotI64,
    MissingExpr,
};

inline std::string_view rule_name(Rule r) {
    switch (r) {
        case Rule::ReadBeforeWrite: return "ReadBeforeWrite";
        case Rule::MultipleWrite: return "MultipleWrite";
        case Rule::UndeclaredTemp: return "UndeclaredTemp";
        case Rule::TypeMismatch: return "TypeMismatch";
        case Rule::ConstOutOfRange: return "ConstOutOfRange";
        case Rule::GuardNotI1: return "GuardNotI1";
        case Rule::AddressNotI64: return "AddressNotI64";
        case Rule::NextNotI64: return "NextNotI64";
        case Rule::MissingExpr: return "MissingExpr";
    }
    return "?";
}

/// Statement index -1 designates the NEXT expression.
struct Violation {
    int stmt_index;
    Rule rule;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::string describe(const Violation& v) {
    std::string where = v.stmt_index < 0 ? "NEXT" : "stmt" + std::to_string(v.stmt_index);
    return std::string(rule_name(v.rule)) + "@" + where + (v.detail.empty() ? "" : ": " + v.detail);
}

namespace detail {

/// Type inference that records violations. Returns nullopt when the type is
/// unknown (Opaque subtree or an error already reported below).
class TypeChecker {
public:
    TypeChecker(const TempTypes& temps, std::vector<Violation>& out) : temps_(temps), out_(out) {}

    std::optional<Ty> check(const ExprPtr& e, int idx) {
        if (!e) {
            out_.push_back({idx, Rule::MissingExpr, "null expression"});
            return std::nullopt;
        }
        return std::visit([&](const auto& n) { return check_node(n, idx); }, e->node);
    }

private:
    void mismatch(int idx, std::string what) { out_.push_back({idx, Rule::TypeMismatch, std::move(what)}); }

    std::optional<Ty> check_node(const Const& c, int idx) {
        if (!fits(c.value, c.type))
            out_.push_back({idx, Rule::ConstOutOfRange, "constant exceeds " + std::string(type_name(c.type))});
        return c.type;
    }
    std::optional<Ty> check_node(const RdTmp& r, int idx) {
        auto it = temps_.find(r.tmp);
        if (it == temps_.end()) {
            out_.push_back({idx, Rule::UndeclaredTemp, "t" + std::to_string(r.tmp)});
            return std::nullopt;
        }
        return it->second;
    }
    std::optional<Ty> check_node(const Get& g, int) { return g.type; }
    std::optional<Ty> check_node(const Load& l, int idx) {
        auto at = check(l.addr, idx);
        if (at && *at != Ty::I64) out_.push_back({idx, Rule::AddressNotI64, "load address"});
        return l.type;
    }
    std::optional<Ty> check_node(const Binop& b, int idx) {
        auto sig = signature(b.op);
        if (!is_valid_op(b.op) || sig.args.size() != 2) {
            mismatch(idx, op_name(b.op) + " is not binary");
            return std::nullopt;
        }
        auto lt = check(b.lhs, idx);
        auto rt = check(b.rhs, idx);
        if (lt && *lt != sig.args[0]) mismatch(idx, op_name(b.op) + " lhs is " + std::string(type_name(*lt)));
        if (rt && *rt != sig.args[1]) mismatch(idx, op_name(b.op) + " rhs is " + std::string(type_name(*rt)));
        return sig.result;
    }
    std::optional<Ty> check_node(const Unop& u, int idx) {
        auto sig = signature(u.op);
        if (!is_valid_op(u.op) || sig.args.size() != 1) {
            mismatch(idx, op_name(u.op) + " is not unary");
            return std::nullopt;
        }
        auto at = check(u.arg, idx);
        if (at && *at != sig.args[0]) mismatch(idx, op_name(u.op) + " arg is " + std::string(type_name(*at)));
        return sig.result;
    }
    std::optional<Ty> check_node(const Ite& i, int idx) {
        auto ct = check(i.cond, idx);
        auto tt = check(i.ift, idx);
        auto ft = check(i.iff, idx);
        if (ct && *ct != Ty::I1) mismatch(idx, "ITE condition is " + std::string(type_name(*ct)));
        if (tt && ft && *tt != *ft) mismatch(idx, "ITE arms differ");
        return tt ? tt : ft;
    }
    std::optional<Ty> check_node(const Opaque& o, int idx) {
        for (const auto& a : o.args) check(a, idx);
        return std::nullopt;
    }

    const TempTypes& temps_;
    std::vector<Violation>& out_;
};

}  // namespace detail

/// Type of a well-formed expression; nullopt for Opaque or ill-typed input.
inline std::optional<Ty> type_of(const ExprPtr& e, const TempTypes& temps) {
    std::vector<Violation> sink;
    detail::TypeChecker tc(temps, sink);
    auto t = tc.check(e, 0);
    if (!sink.empty()) return std::nullopt;
    return t;
}

/// Type-checks one statement against a temp environment (no SSA checks).
inline std::vector<Violation> check_statement(const Statement& s, const TempTypes& temps, int idx) {
    std::vector<Violation> out;
    detail::TypeChecker tc(temps, out);
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, WrTmp>) {
                auto rt = tc.check(n.rhs, idx);
                auto it = temps.find(n.tmp);
                if (it == temps.end())
                    out.push_back({idx, Rule::UndeclaredTemp, "t" + std::to_string(n.tmp)});
                else if (rt && *rt != it->second)
                    out.push_back({idx, Rule::TypeMismatch,
                                   "t" + std::to_string(n.tmp) + " is " + std::string(type_name(it->second)) +
                                       ", rhs is " + std::string(type_name(*rt))});
            } else if constexpr (std::is_same_v<N, Put>) {
                tc.check(n.rhs, idx);
            } else if constexpr (std::is_same_v<N, Store>) {
                auto at = tc.check(n.addr, idx);
                tc.check(n.data, idx);
                if (at && *at != Ty::I64) out.push_back({idx, Rule::AddressNotI64, "store address"});
            } else if constexpr (std::is_same_v<N, Exit>) {
                auto gt = tc.check(n.guard, idx);
                if (gt && *gt != Ty::I1) out.push_back({idx, Rule::GuardNotI1, std::string(type_name(*gt))});
            }
        },
        s);
    return out;
}

/// Checks SSA discipline, declarations and typing. Empty result means the
/// block is well formed. Pure.
inline std::vector<Violation> validate(const IrSb& block) {
    std::vector<Violation> out;
    std::set<TempId> written;
    auto check_reads = [&](const std::set<TempId>& reads, int idx) {
        for (TempId t : reads)
            if (!written.count(t))
                out.push_back({idx, Rule::ReadBeforeWrite, "t" + std::to_string(t)});
    };
    for (std::size_t i = 0; i < block.stmts.size(); ++i) {
        const int idx = static_cast<int>(i);
        const auto& s = block.stmts[i];
        check_reads(temps_read(s), idx);
        auto tv = check_statement(s, block.temps, idx);
        out.insert(out.end(), tv.begin(), tv.end());
        if (const auto* w = std::get_if<WrTmp>(&s)) {
            if (!written.insert(w->tmp).second)
                out.push_back({idx, Rule::MultipleWrite, "t" + std::to_string(w->tmp)});
        }
    }
    if (!block.next) {
        out.push_back({-1, Rule::MissingExpr, "block has no NEXT"});
    } else {
        std::set<TempId> reads;
        collect_reads(block.next, reads);
        check_reads(reads, -1);
        detail::TypeChecker tc(block.temps, out);
        auto nt = tc.check(block.next, -1);
        if (nt && *nt != Ty::I64) out.push_back({-1, Rule::NextNotI64, std::string(type_name(*nt))});
    }
    return out;
}

inline bool is_valid(const IrSb& b) { return validate(b).empty(); }

/// Thrown when a block that must be well formed is not.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> v)
        : Error(summarize(v)), violations(std::move(v)) {}

    std::vector<Violation> violations;

private:
    static std::string summarize(const std::vector<Violation>& v) {
        std::string msg = "invalid block:";
        for (const auto& x : v) msg += " " + describe(x) + ";";
        return msg;
    }
};

}  // namespace lift
