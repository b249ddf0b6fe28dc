#pragma once

// Static symbolic-execution cost model. Every statement gets a base weight
// plus the weight of each expression node beneath it; stores, loads and
// multiply/divide are the heavy classes.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lift/ir.hpp"

namespace lift {

using CostUnits = std::uint64_t;

struct WeightTable {
    CostUnits imark = 0;
    CostUnits noop = 0;
    CostUnits get = 1;
    CostUnits put_base = 1;
    CostUnits wrtmp_base = 1;
    CostUnits store_base = 6;
    CostUnits exit = 3;
    CostUnits ite = 3;
    CostUnits unop = 1;
    CostUnits binop_simple = 2;
    CostUnits binop_mul = 4;
    CostUnits binop_div = 8;
    CostUnits load = 5;
    CostUnits opaque = 4;

    friend bool operator==(const WeightTable&, const WeightTable&) = default;

    /// Every weight multiplied by `k`.
    WeightTable scaled(CostUnits k) const {
        WeightTable w = *this;
        for (CostUnits* f : w.fields()) *f *= k;
        return w;
    }

    std::vector<CostUnits*> fields() {
        std::vector<CostUnits*> out;
        for (auto& [name, f] : named_fields()) out.push_back(f);
        return out;
    }

    std::vector<std::pair<std::string_view, CostUnits*>> named_fields() {
        return {{"imark", &imark},   {"noop", &noop},       {"get", &get},
                {"put_base", &put_base}, {"wrtmp_base", &wrtmp_base}, {"store_base", &store_base},
                {"exit", &exit},     {"ite", &ite},         {"unop", &unop},
                {"binop_simple", &binop_simple}, {"binop_mul", &binop_mul}, {"binop_div", &binop_div},
                {"load", &load},     {"opaque", &opaque}};
    }

    /// Throws ConfigError for an unknown weight name.
    void set(std::string_view name, CostUnits value) {
        for (auto& [n, f] : named_fields())
            if (n == name) {
                *f = value;
                return;
            }
        throw ConfigError("unknown cost weight '" + std::string(name) + "'");
    }
};

inline CostUnits expr_cost(const ExprPtr& e, const WeightTable& w) {
    CostUnits total = 0;
    walk(e, [&](const Expr& x) {
        std::visit(
            [&](const auto& n) {
                using N = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<N, Get>) total += w.get;
                else if constexpr (std::is_same_v<N, Load>) total += w.load;
                else if constexpr (std::is_same_v<N, Ite>) total += w.ite;
                else if constexpr (std::is_same_v<N, Unop>) total += w.unop;
                else if constexpr (std::is_same_v<N, Opaque>) total += w.opaque;
                else if constexpr (std::is_same_v<N, Binop>) {
                    if (n.op.kind == OpKind::Mul) total += w.binop_mul;
                    else if (n.op.kind == OpKind::DivU || n.op.kind == OpKind::DivS) total += w.binop_div;
                    else total += w.binop_simple;
                }
            },
            x.node);
    });
    return total;
}

inline CostUnits statement_cost(const Statement& s, const WeightTable& w = {}) {
    CostUnits base = std::visit(
        [&](const auto& n) -> CostUnits {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, IMark>) return w.imark;
            else if constexpr (std::is_same_v<N, WrTmp>) return w.wrtmp_base;
            else if constexpr (std::is_same_v<N, Put>) return w.put_base;
            else if constexpr (std::is_same_v<N, Store>) return w.store_base;
            else if constexpr (std::is_same_v<N, Exit>) return w.exit;
            else return w.noop;
        },
        s);
    for (const auto& root : expr_roots(s)) base += expr_cost(root, w);
    return base;
}

inline std::vector<CostUnits> statement_costs(const IrSb& b, const WeightTable& w = {}) {
    std::vector<CostUnits> out;
    out.reserve(b.stmts.size());
    for (const auto& s : b.stmts) out.push_back(statement_cost(s, w));
    return out;
}

inline CostUnits static_block_cost(const IrSb& b, const WeightTable& w = {}) {
    CostUnits total = 0;
    for (const auto& s : b.stmts) total += statement_cost(s, w);
    return total;
}

struct ScoredStatement {
    std::uint64_t block_addr;
    std::size_t stmt_index;
    CostUnits cost;

    friend bool operator==(const ScoredStatement&, const ScoredStatement&) = default;
};

/// Descending cost; ties by (block address, index) ascending.
inline bool ranks_before(const ScoredStatement& a, const ScoredStatement& b) {
    if (a.cost != b.cost) return a.cost > b.cost;
    if (a.block_addr != b.block_addr) return a.block_addr < b.block_addr;
    return a.stmt_index < b.stmt_index;
}

/// Every rankable statement program-wide, in rank order.
inline std::vector<ScoredStatement> score_statements(const Program& p, const WeightTable& w = {}) {
    std::vector<ScoredStatement> all;
    for (const auto& [addr, b] : p.blocks)
        for (std::size_t i = 0; i < b.stmts.size(); ++i)
            if (!is_metadata(b.stmts[i])) all.push_back({addr, i, statement_cost(b.stmts[i], w)});
    std::sort(all.begin(), all.end(), ranks_before);
    return all;
}

/// The k most expensive statements of the whole program.
inline std::vector<ScoredStatement> rank_statements(const Program& p, const WeightTable& w, std::size_t k) {
    if (k == 0) throw std::invalid_argument("rank_statements: k must be >= 1");
    auto all = score_statements(p, w);
    if (all.size() > k) all.resize(k);
    return all;
}

inline std::size_t rankable_count(const Program& p) {
    std::size_t n = 0;
    for (const auto& [addr, b] : p.blocks)
        for (const auto& s : b.stmts) n += !is_metadata(s);
    return n;
}

}  // namespace lift
