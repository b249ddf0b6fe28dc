#pragma once

// Deterministic peephole rules, tried in order; the first one that matches
// produces the proposal.
//
//   R1  arithmetic identities (x+0, x-0, x|0, x^0, shifts by 0, x*1, x&~0)
//   R2  constant folding of ops over constants
//   R3  self-cancel (x^x, x-x -> 0; x&x, x|x -> x)
//   R4  Not(Not(x)) -> x
//   R5  store overwritten by the very next store to the same address -> NoOp
//   R6  PUT overwritten by a later PUT before any exit or read of it -> NoOp
//   R7  pure WrTmp whose temp is never read -> NoOp

#include <functional>
#include <optional>
#include <string>

#include "lift/interp.hpp"
#include "lift/rewrite.hpp"

namespace lift {

namespace detail {

using NodeRule = std::function<std::optional<ExprPtr>(const Expr&)>;

/// Bottom-up rewrite: children first, then `rule` at the rebuilt node.
inline ExprPtr rewrite_expr(const ExprPtr& e, const NodeRule& rule, bool& changed) {
    if (!e) return e;
    ExprPtr node = std::visit(
        [&](const auto& n) -> ExprPtr {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, Load>) {
                auto a = rewrite_expr(n.addr, rule, changed);
                return a == n.addr ? e : mk_load(n.type, a);
            } else if constexpr (std::is_same_v<N, Binop>) {
                auto l = rewrite_expr(n.lhs, rule, changed);
                auto r = rewrite_expr(n.rhs, rule, changed);
                return (l == n.lhs && r == n.rhs) ? e : mk_binop(n.op, l, r);
            } else if constexpr (std::is_same_v<N, Unop>) {
                auto a = rewrite_expr(n.arg, rule, changed);
                return a == n.arg ? e : mk_unop(n.op, a);
            } else if constexpr (std::is_same_v<N, Ite>) {
                auto c = rewrite_expr(n.cond, rule, changed);
                auto t = rewrite_expr(n.ift, rule, changed);
                auto f = rewrite_expr(n.iff, rule, changed);
                return (c == n.cond && t == n.ift && f == n.iff) ? e : mk_ite(c, t, f);
            } else if constexpr (std::is_same_v<N, Opaque>) {
                std::vector<ExprPtr> args;
                bool any = false;
                for (const auto& a : n.args) {
                    args.push_back(rewrite_expr(a, rule, changed));
                    any = any || args.back() != a;
                }
                return any ? mk_opaque(n.name, std::move(args)) : e;
            } else {
                return e;
            }
        },
        e->node);
    if (auto r = rule(*node)) {
        changed = true;
        return *r;
    }
    return node;
}

/// Applies `rule` to every expression root of `s`; nullopt if nothing fired.
inline std::optional<Statement> rewrite_statement(const Statement& s, const NodeRule& rule) {
    bool changed = false;
    auto rw = [&](const ExprPtr& e) { return rewrite_expr(e, rule, changed); };
    Statement out = std::visit(
        [&](const auto& n) -> Statement {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, WrTmp>) return WrTmp{n.tmp, rw(n.rhs)};
            else if constexpr (std::is_same_v<N, Put>) return Put{n.offset, rw(n.rhs)};
            else if constexpr (std::is_same_v<N, Store>) {
                auto a = rw(n.addr);
                return Store{a, rw(n.data)};
            } else if constexpr (std::is_same_v<N, Exit>) return Exit{rw(n.guard), n.target, n.jumpkind, n.pc_offset};
            else return n;
        },
        s);
    if (!changed) return std::nullopt;
    return out;
}

inline bool is_const_value(const ExprPtr& e, std::uint64_t v) {
    const auto* c = e->as<Const>();
    return c && (c->value & type_mask(c->type)) == (v & type_mask(c->type));
}

inline std::optional<ExprPtr> identity_rule(const Expr& x) {
    const auto* b = x.as<Binop>();
    if (!b) return std::nullopt;
    const std::uint64_t ones = type_mask(b->op.width);
    switch (b->op.kind) {
        case OpKind::Add: case OpKind::Or: case OpKind::Xor:
            if (is_const_value(b->rhs, 0)) return b->lhs;
            if (is_const_value(b->lhs, 0)) return b->rhs;
            break;
        case OpKind::Sub: case OpKind::Shl: case OpKind::Shr: case OpKind::Sar:
            if (is_const_value(b->rhs, 0)) return b->lhs;
            break;
        case OpKind::Mul:
            if (is_const_value(b->rhs, 1)) return b->lhs;
            if (is_const_value(b->lhs, 1)) return b->rhs;
            break;
        case OpKind::And:
            if (is_const_value(b->rhs, ones)) return b->lhs;
            if (is_const_value(b->lhs, ones)) return b->rhs;
            break;
        default: break;
    }
    return std::nullopt;
}

inline std::optional<ExprPtr> fold_rule(const Expr& x) {
    if (const auto* b = x.as<Binop>()) {
        const auto* l = b->lhs->as<Const>();
        const auto* r = b->rhs->as<Const>();
        if (!l || !r) return std::nullopt;
        auto v = apply_binop(b->op, l->value, r->value);
        if (!v) return std::nullopt;
        return mk_const(*v, signature(b->op).result);
    }
    if (const auto* u = x.as<Unop>()) {
        const auto* a = u->arg->as<Const>();
        if (!a) return std::nullopt;
        return mk_const(apply_unop(u->op, a->value), signature(u->op).result);
    }
    return std::nullopt;
}

inline std::optional<ExprPtr> self_cancel_rule(const Expr& x) {
    const auto* b = x.as<Binop>();
    if (!b || !same_expr(b->lhs, b->rhs)) return std::nullopt;
    switch (b->op.kind) {
        case OpKind::Xor: case OpKind::Sub: return mk_const(0, b->op.width);
        case OpKind::And: case OpKind::Or: return b->lhs;
        default: return std::nullopt;
    }
}

inline std::optional<ExprPtr> double_not_rule(const Expr& x) {
    const auto* outer = x.as<Unop>();
    if (!outer || outer->op.kind != OpKind::Not) return std::nullopt;
    const auto* inner = outer->arg->as<Unop>();
    if (!inner || !(inner->op == outer->op)) return std::nullopt;
    return inner->arg;
}

inline bool has_load(const ExprPtr& e) {
    return expr_contains(e, [](const Expr& x) { return x.is<Load>(); });
}

inline std::optional<unsigned> stored_size(const ExprPtr& data, const TempTypes& temps) {
    if (auto t = type_of(data, temps)) return byte_size(*t);
    return std::nullopt;
}

inline bool reads_guest_range(const ExprPtr& e, std::uint32_t off, unsigned size) {
    return expr_contains(e, [&](const Expr& x) {
        const auto* g = x.as<Get>();
        if (!g) return false;
        const std::uint64_t lo = g->offset, hi = lo + byte_size(g->type);
        return lo < std::uint64_t{off} + size && std::uint64_t{off} < hi;
    });
}

inline bool may_fault_or_opaque(const ExprPtr& e) {
    return expr_contains(e, [](const Expr& x) {
        if (x.is<Opaque>()) return true;
        if (const auto* b = x.as<Binop>()) {
            if (b->op.kind == OpKind::DivU || b->op.kind == OpKind::DivS) {
                const auto* c = b->rhs->as<Const>();
                return !c || c->value == 0;
            }
        }
        return false;
    });
}

}  // namespace detail

/// R5: the candidate store is dead if the next non-metadata statement stores
/// at least as many bytes to a syntactically identical address.
inline bool adjacent_store_dead(const IrSb& b, std::size_t idx) {
    const auto* st = std::get_if<Store>(&b.stmts[idx]);
    if (!st || detail::has_load(st->addr)) return false;
    auto size = detail::stored_size(st->data, b.temps);
    if (!size) return false;
    for (std::size_t j = idx + 1; j < b.stmts.size(); ++j) {
        if (is_metadata(b.stmts[j])) continue;
        const auto* later = std::get_if<Store>(&b.stmts[j]);
        if (!later || !same_expr(later->addr, st->addr) || detail::has_load(later->data)) return false;
        auto later_size = detail::stored_size(later->data, b.temps);
        return later_size && *later_size >= *size;
    }
    return false;
}

/// R6: the candidate PUT is dead if a later PUT to the same offset covers it
/// with no exit and no read of the written bytes in between.
inline bool redundant_put(const IrSb& b, std::size_t idx) {
    const auto* put = std::get_if<Put>(&b.stmts[idx]);
    if (!put) return false;
    auto t = type_of(put->rhs, b.temps);
    if (!t) return false;
    const unsigned size = byte_size(*t);
    for (std::size_t j = idx + 1; j < b.stmts.size(); ++j) {
        const auto& s = b.stmts[j];
        if (std::holds_alternative<Exit>(s)) return false;
        for (const auto& root : expr_roots(s))
            if (detail::reads_guest_range(root, put->offset, size)) return false;
        if (const auto* later = std::get_if<Put>(&s); later && later->offset == put->offset) {
            auto lt = type_of(later->rhs, b.temps);
            if (lt && byte_size(*lt) >= size) return true;
        }
    }
    return false;
}

/// R7: a WrTmp whose temp nobody reads and whose rhs cannot fault.
inline bool dead_wrtmp(const IrSb& b, std::size_t idx) {
    const auto* w = std::get_if<WrTmp>(&b.stmts[idx]);
    if (!w) return false;
    return !read_temps(b).count(w->tmp) && !detail::may_fault_or_opaque(w->rhs);
}

/// Returns the replacement and rule id of the first rule that fires.
inline std::optional<std::pair<Statement, std::string>> apply_first_rule(const IrSb& b, std::size_t idx) {
    const Statement& s = b.stmts[idx];
    if (auto r = detail::rewrite_statement(s, detail::identity_rule)) return std::pair{*r, std::string("R1")};
    if (auto r = detail::rewrite_statement(s, detail::fold_rule)) return std::pair{*r, std::string("R2")};
    if (auto r = detail::rewrite_statement(s, detail::self_cancel_rule)) return std::pair{*r, std::string("R3")};
    if (auto r = detail::rewrite_statement(s, detail::double_not_rule)) return std::pair{*r, std::string("R4")};
    if (adjacent_store_dead(b, idx)) return std::pair{Statement{NoOp{}}, std::string("R5")};
    if (redundant_put(b, idx)) return std::pair{Statement{NoOp{}}, std::string("R6")};
    if (dead_wrtmp(b, idx)) return std::pair{Statement{NoOp{}}, std::string("R7")};
    return std::nullopt;
}

inline std::optional<RewriteProposal> rule_rewrite(const RewriteCandidate& c) {
    auto hit = apply_first_rule(*c.block, c.stmt_index);
    if (!hit) return std::nullopt;
    return checked_proposal(std::move(hit->first), Provenance::rule(hit->second), c);
}

}  // namespace lift
