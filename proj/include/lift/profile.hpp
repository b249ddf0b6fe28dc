#pragma once

// Repeated concrete execution of every block to find where the cost goes.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "lift/cost.hpp"
#include "lift/interp.hpp"
#include "lift/ir.hpp"

namespace lift {

struct BlockProfile {
    std::uint64_t addr = 0;
    CostUnits static_total = 0;
    double mean_cost_units = 0.0;
    double mean_wall_seconds = 0.0;
    std::size_t runs = 0;
    std::size_t faults = 0;
    /// Contains an Opaque op: only the static cost is reported.
    bool opaque = false;
};

struct CostReport {
    std::vector<ScoredStatement> statements;  // program order
    std::vector<BlockProfile> blocks;         // descending mean cost-units
    std::vector<ScoredStatement> ranking;     // descending cost

    /// Sum over blocks of mean dynamic cost-units.
    double total_mean_cost_units() const {
        double t = 0;
        for (const auto& b : blocks) t += b.mean_cost_units;
        return t;
    }
    double total_mean_wall_seconds() const {
        double t = 0;
        for (const auto& b : blocks) t += b.mean_wall_seconds;
        return t;
    }
};

/// Seed of run `i` under a master seed.
inline std::uint64_t run_seed(std::uint64_t master, std::uint64_t i) { return mix64(master, i); }

inline BlockProfile profile_block(const IrSb& b, std::size_t runs, std::uint64_t seed, const WeightTable& w = {}) {
    BlockProfile bp;
    bp.addr = b.addr;
    bp.static_total = static_block_cost(b, w);
    bp.runs = runs;
    bp.opaque = contains_opaque(b);
    if (bp.opaque || runs == 0) {
        bp.mean_cost_units = static_cast<double>(bp.static_total);
        return bp;
    }
    CostUnits total = 0;
    double wall = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
        MachineState st(run_seed(seed, r));
        auto t0 = std::chrono::steady_clock::now();
        try {
            total += execute(st, b, w).cost;
        } catch (const EvalError&) {
            total += bp.static_total;
            ++bp.faults;
        }
        wall += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    bp.mean_cost_units = static_cast<double>(total) / static_cast<double>(runs);
    bp.mean_wall_seconds = wall / static_cast<double>(runs);
    return bp;
}

inline CostReport profile_program(const Program& p, std::size_t runs, std::uint64_t seed, const WeightTable& w = {}) {
    if (runs == 0) throw std::invalid_argument("profile_program: runs must be >= 1");
    CostReport rep;
    for (const auto& [addr, b] : p.blocks) {
        for (std::size_t i = 0; i < b.stmts.size(); ++i)
            if (!is_metadata(b.stmts[i])) rep.statements.push_back({addr, i, statement_cost(b.stmts[i], w)});
        rep.blocks.push_back(profile_block(b, runs, seed, w));
    }
    rep.ranking = rep.statements;
    std::sort(rep.ranking.begin(), rep.ranking.end(), ranks_before);
    std::stable_sort(rep.blocks.begin(), rep.blocks.end(), [](const BlockProfile& a, const BlockProfile& b) {
        return a.mean_cost_units > b.mean_cost_units;
    });
    return rep;
}

}  // namespace lift
