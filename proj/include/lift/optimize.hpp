#pragma once

// Rank -> propose -> reintegrate -> verify over a whole program. Only
// rewrites that verify Equivalent are kept; everything is logged.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lift/backend.hpp"
#include "lift/cost.hpp"
#include "lift/rewrite.hpp"
#include "lift/text.hpp"
#include "lift/verify.hpp"

namespace lift {

enum class Outcome : std::uint8_t { Retained, Rejected, Discarded };

inline std::string_view outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Retained: return "retained";
        case Outcome::Rejected: return "rejected";
        case Outcome::Discarded: return "discarded";
    }
    return "?";
}

struct RewriteLogEntry {
    std::uint64_t block_addr = 0;
    std::size_t stmt_index = 0;
    CostUnits cost = 0;
    std::string original;
    std::optional<std::string> replacement;
    std::string provenance;
    ProposalStatus status = ProposalStatus::RejectedSyntax;
    std::string reason;
    std::optional<Verdict> verdict;
    Outcome outcome = Outcome::Rejected;
};

struct RewriteLog {
    std::vector<RewriteLogEntry> entries;  // rank order
    /// Blocks whose end-to-end re-check failed and were restored.
    std::vector<std::uint64_t> reverted_blocks;
    /// A rule-origin rewrite failed verification, or a block had to be reverted.
    bool unexpected_mismatch = false;

    std::size_t count(Outcome o) const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.outcome == o;
        return n;
    }
};

struct OptimizeResult {
    Program program;
    RewriteLog log;
};

/// Per-block master seed for verification trials.
inline std::uint64_t block_verify_seed(std::uint64_t seed, std::uint64_t addr) { return mix64(seed, addr); }

inline OptimizeResult optimize_program(const Program& p, std::size_t k, const RewriteBackend& backend,
                                       const WeightTable& w = {}, const VerifyPolicy& policy = {}) {
    OptimizeResult res{p, {}};
    if (k == 0 || p.blocks.empty()) return res;

    const auto ranked = rank_statements(p, w, k);
    if (ranked.empty()) return res;

    std::map<std::uint64_t, std::shared_ptr<const IrSb>> originals;
    for (const auto& [addr, b] : p.blocks) originals.emplace(addr, std::make_shared<const IrSb>(b));

    std::vector<RewriteCandidate> cands;
    cands.reserve(ranked.size());
    for (const auto& r : ranked) cands.push_back(make_candidate(originals.at(r.block_addr), r.stmt_index));
    const auto proposals = backend.request_all(cands);

    auto& log = res.log;
    log.entries.resize(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        auto& e = log.entries[i];
        e.block_addr = ranked[i].block_addr;
        e.stmt_index = ranked[i].stmt_index;
        e.cost = ranked[i].cost;
        e.original = print_statement(cands[i].original);
        e.provenance = proposals[i].provenance.describe();
        e.status = proposals[i].status;
        e.reason = proposals[i].reason;
        if (proposals[i].sanitized()) e.replacement = print_statement(proposals[i].replacement);
    }

    // Apply per block in rank order; each step is verified against the
    // previously accepted version of the block.
    std::map<std::uint64_t, std::vector<std::size_t>> by_block;
    for (std::size_t i = 0; i < ranked.size(); ++i) by_block[ranked[i].block_addr].push_back(i);

    for (const auto& [addr, order] : by_block) {
        IrSb current = *originals.at(addr);
        VerifyPolicy step = policy;
        step.seed = block_verify_seed(policy.seed, addr);
        bool changed = false;
        for (std::size_t i : order) {
            auto& e = log.entries[i];
            const auto& prop = proposals[i];
            if (!prop.sanitized()) continue;
            if (prop.replacement == current.stmts[e.stmt_index]) {
                e.reason = "unchanged";
                continue;
            }
            IrSb next;
            try {
                next = reintegrate(current, {{e.stmt_index, prop}});
            } catch (const IntegrationError& err) {
                e.outcome = Outcome::Discarded;
                e.reason = std::string("integration: ") + err.what();
                continue;
            }
            const bool merge = prop.provenance.kind == Provenance::Kind::Rule && prop.provenance.rule_id == "R5";
            step.writes = merge ? WriteCompare::FinalImage : WriteCompare::Ordered;
            auto verdict = verify_rewrite(current, next, step);
            e.verdict = verdict;
            if (verdict.equivalent()) {
                e.outcome = Outcome::Retained;
                current = std::move(next);
                changed = true;
            } else {
                e.outcome = Outcome::Discarded;
                if (prop.provenance.kind == Provenance::Kind::Rule && verdict.kind == Verdict::Kind::Mismatch)
                    log.unexpected_mismatch = true;
            }
        }
        if (!changed) continue;
        auto whole = differential_verify(*originals.at(addr), current, policy.trials, step.seed,
                                         WriteCompare::FinalImage);
        if (!whole.equivalent()) {
            log.unexpected_mismatch = true;
            log.reverted_blocks.push_back(addr);
            for (std::size_t i : order)
                if (log.entries[i].outcome == Outcome::Retained) {
                    log.entries[i].outcome = Outcome::Discarded;
                    log.entries[i].reason = "block re-check failed: " + whole.detail;
                }
            continue;
        }
        res.program.blocks.at(addr) = std::move(current);
    }
    return res;
}

inline OptimizeResult optimize_program(const Program& p, std::size_t k, const BackendConfig& cfg,
                                       const WeightTable& w = {}, const VerifyPolicy& policy = {}) {
    return optimize_program(p, k, RewriteBackend(cfg), w, policy);
}

// ---------------------------------------------------------------------------
// JSON form of the log
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Verdict& v) {
    nlohmann::json j = {{"kind", std::string(verdict_name(v.kind))}, {"trials", v.trials}, {"detail", v.detail}};
    if (v.kind == Verdict::Kind::Mismatch) {
        j["counterexample_seed"] = v.counterexample_seed;
        j["counterexample_trial"] = v.counterexample_trial;
    }
    return j;
}

inline nlohmann::json to_json(const RewriteLog& log) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : log.entries) {
        nlohmann::json j = {
            {"block_addr", hex_addr(e.block_addr)},
            {"stmt_index", e.stmt_index},
            {"cost", e.cost},
            {"original", e.original},
            {"provenance", e.provenance},
            {"status", std::string(status_name(e.status))},
            {"reason", e.reason},
            {"outcome", std::string(outcome_name(e.outcome))},
        };
        j["replacement"] = e.replacement ? nlohmann::json(*e.replacement) : nlohmann::json(nullptr);
        j["verdict"] = e.verdict ? to_json(*e.verdict) : nlohmann::json(nullptr);
        entries.push_back(std::move(j));
    }
    nlohmann::json reverted = nlohmann::json::array();
    for (auto a : log.reverted_blocks) reverted.push_back(hex_addr(a));
    return {
        {"entries", entries},
        {"reverted_blocks", reverted},
        {"unexpected_mismatch", log.unexpected_mismatch},
        {"summary",
         {{"candidates", log.entries.size()},
          {"retained", log.count(Outcome::Retained)},
          {"rejected", log.count(Outcome::Rejected)},
          {"discarded", log.count(Outcome::Discarded)}}},
    };
}

}  // namespace lift
