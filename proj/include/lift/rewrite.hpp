#pragma once

// Statement-level rewriting: candidates, proposals, the replacement
// contract, LLM prompt construction and response sanitizing, and putting
// accepted replacements back into their block.

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lift/ir.hpp"
#include "lift/text.hpp"

namespace lift {

struct RewriteCandidate {
    std::uint64_t block_addr = 0;
    std::size_t stmt_index = 0;
    Statement original = NoOp{};
    std::shared_ptr<const IrSb> block;
};

inline RewriteCandidate make_candidate(std::shared_ptr<const IrSb> block, std::size_t idx) {
    if (!block || idx >= block->stmts.size())
        throw std::invalid_argument("make_candidate: index out of range");
    if (is_metadata(block->stmts[idx]))
        throw std::invalid_argument("make_candidate: IMark/NoOp statements are not rewrite targets");
    return {block->addr, idx, block->stmts[idx], std::move(block)};
}

struct Provenance {
    enum class Kind : std::uint8_t { Rule, Llm, Replay };
    Kind kind = Kind::Rule;
    std::string rule_id;     // Rule
    std::string raw_text;    // Llm, Replay
    std::string file;        // Replay
    std::size_t line = 0;    // Replay

    static Provenance rule(std::string id) { return {Kind::Rule, std::move(id), {}, {}, 0}; }
    static Provenance llm(std::string raw) { return {Kind::Llm, {}, std::move(raw), {}, 0}; }
    static Provenance replay(std::string raw, std::string file, std::size_t line) {
        return {Kind::Replay, {}, std::move(raw), std::move(file), line};
    }

    std::string describe() const {
        switch (kind) {
            case Kind::Rule: return "rule:" + rule_id;
            case Kind::Llm: return "llm";
            case Kind::Replay: return "replay:" + file + ":" + std::to_string(line);
        }
        return "?";
    }
};

enum class ProposalStatus : std::uint8_t { Sanitized, RejectedSyntax, RejectedContract };

inline std::string_view status_name(ProposalStatus s) {
    switch (s) {
        case ProposalStatus::Sanitized: return "Sanitized";
        case ProposalStatus::RejectedSyntax: return "RejectedSyntax";
        case ProposalStatus::RejectedContract: return "RejectedContract";
    }
    return "?";
}

struct RewriteProposal {
    Statement replacement = NoOp{};
    Provenance provenance;
    ProposalStatus status = ProposalStatus::RejectedSyntax;
    std::string reason;

    bool sanitized() const { return status == ProposalStatus::Sanitized; }
};

// ---------------------------------------------------------------------------
// Replacement contract
// ---------------------------------------------------------------------------

/// Why `repl` may not stand in for the candidate's statement, if it may not.
inline std::optional<std::string> contract_violation(const Statement& repl, const RewriteCandidate& c) {
    const IrSb& block = *c.block;
    const int idx = static_cast<int>(c.stmt_index);

    if (auto v = check_statement(repl, block.temps, idx); !v.empty()) return "ill-typed: " + describe(v.front());

    const bool is_noop = std::holds_alternative<NoOp>(repl);
    if (const auto* w = std::get_if<WrTmp>(&c.original)) {
        const auto* rw = std::get_if<WrTmp>(&repl);
        if (!is_noop && !(rw && rw->tmp == w->tmp))
            return "WrTmp to t" + std::to_string(w->tmp) + " must stay a WrTmp to the same temp or become NoOp";
    } else if (const auto* p = std::get_if<Put>(&c.original)) {
        const auto* rp = std::get_if<Put>(&repl);
        if (!is_noop && !(rp && rp->offset == p->offset))
            return "PUT(offset=" + std::to_string(p->offset) + ") must stay a PUT to the same offset or become NoOp";
    } else if (std::holds_alternative<Store>(c.original)) {
        if (!is_noop && !std::holds_alternative<Store>(repl)) return "STORE must stay a STORE or become NoOp";
    } else if (const auto* e = std::get_if<Exit>(&c.original)) {
        const auto* re = std::get_if<Exit>(&repl);
        if (!re) return "Exit may only be replaced by an Exit";
        if (re->target != e->target || re->jumpkind != e->jumpkind || re->pc_offset != e->pc_offset)
            return "Exit target and jump kind must not change";
    }

    std::set<TempId> defined;
    for (std::size_t i = 0; i < c.stmt_index; ++i)
        if (const auto* w = std::get_if<WrTmp>(&block.stmts[i])) defined.insert(w->tmp);
    for (TempId t : temps_read(repl))
        if (!defined.count(t)) return "reads t" + std::to_string(t) + " before it is written";
    return std::nullopt;
}

/// Wraps an already-parsed replacement into a proposal, applying the contract.
inline RewriteProposal checked_proposal(Statement repl, Provenance prov, const RewriteCandidate& c) {
    RewriteProposal p{std::move(repl), std::move(prov), ProposalStatus::Sanitized, {}};
    if (auto why = contract_violation(p.replacement, c)) {
        p.status = ProposalStatus::RejectedContract;
        p.reason = *why;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Prompting and sanitizing
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSystemMessage =
    "You rewrite single statements of VEX IR super-blocks to make symbolic execution cheaper. "
    "Reply with exactly one IR statement line, or the single word NoOp. No explanations.";

/// Byte-deterministic user prompt for one candidate.
inline std::string build_prompt(const RewriteCandidate& c) {
    std::string p;
    p += "The following VEX IR super-block is executed symbolically.\n\n";
    p += print_irsb(*c.block);
    p += "\nTarget statement (index " + format_index(c.stmt_index) + "):\n";
    p += format_index(c.stmt_index) + " | " + print_statement(c.original) + "\n\n";
    p += "Give a replacement for the target statement that behaves identically in this block "
         "but is shorter or cheaper to execute symbolically.\n";
    p += "Rules:\n";
    p += "- Output exactly one statement line in the same textual IR syntax, without the index prefix.\n";
    p += "- Output the line NoOp if the statement can be removed without changing behaviour.\n";
    p += "- Keep the statement kind: a temp assignment must assign the same temp, a PUT must write the same "
         "offset, an exit must keep its target.\n";
    p += "- Only read temps assigned before the target statement.\n";
    p += "- Do not add commentary, explanations or code fences.\n";
    return p;
}

namespace detail {

inline std::string_view strip_backticks(std::string_view s) {
    while (!s.empty() && s.front() == '`') s.remove_prefix(1);
    while (!s.empty() && s.back() == '`') s.remove_suffix(1);
    return trim(s);
}

}  // namespace detail

/// Extracts the replacement statement from raw model output: fences and
/// blank lines dropped, lines scanned from the last one up, first line that
/// parses wins and is then checked against the replacement contract.
inline RewriteProposal sanitize(std::string_view raw, const RewriteCandidate& c, Provenance prov) {
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= raw.size();) {
        auto nl = raw.find('\n', start);
        if (nl == std::string_view::npos) nl = raw.size();
        auto line = detail::trim(raw.substr(start, nl - start));
        start = nl + 1;
        if (line.empty() || line.rfind("```", 0) == 0) continue;
        line = detail::strip_backticks(line);
        if (!line.empty()) lines.push_back(line);
    }
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::optional<Statement> parsed;
        try {
            parsed = parse_statement(*it, c.block->temps);
        } catch (const ParseError&) {
            continue;
        }
        return checked_proposal(std::move(*parsed), std::move(prov), c);
    }
    RewriteProposal p;
    p.provenance = std::move(prov);
    p.status = ProposalStatus::RejectedSyntax;
    p.reason = "no line parses as a statement";
    return p;
}

inline RewriteProposal sanitize(std::string_view raw, const RewriteCandidate& c) {
    return sanitize(raw, c, Provenance::llm(std::string(raw)));
}

// ---------------------------------------------------------------------------
// Reintegration
// ---------------------------------------------------------------------------

class IntegrationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Replaces the indexed statements in place. Temp declarations that only the
/// replaced statements referenced are pruned. Throws IntegrationError if the
/// result is not a well-formed block; the input block is never modified.
inline IrSb reintegrate(const IrSb& block, const std::vector<std::pair<std::size_t, RewriteProposal>>& proposals) {
    if (proposals.empty()) return block;
    IrSb out = block;
    std::set<std::size_t> seen;
    for (const auto& [idx, prop] : proposals) {
        if (!prop.sanitized()) throw std::invalid_argument("reintegrate: proposal is not sanitized");
        if (idx >= out.stmts.size()) throw std::invalid_argument("reintegrate: index out of range");
        if (!seen.insert(idx).second) throw std::invalid_argument("reintegrate: duplicate index");
        out.stmts[idx] = prop.replacement;
    }
    const auto before = referenced_temps(block);
    const auto after = referenced_temps(out);
    for (TempId t : before)
        if (!after.count(t)) out.temps.erase(t);
    if (auto v = validate(out); !v.empty()) throw IntegrationError(std::move(v));
    return out;
}

}  // namespace lift
