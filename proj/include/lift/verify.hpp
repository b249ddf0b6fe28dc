#pragma once

// Equivalence checking between an original block and its rewrite: a
// component-level structural diff, and differential execution from
// identically seeded states.
//
// Observable behaviour is the final guest state, the memory writes and the
// exit outcome. Temps are block-local and never compared.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <optional>
#include <set>
#include <string>

#include "lift/interp.hpp"
#include "lift/ir.hpp"
#include "lift/text.hpp"

namespace lift {

struct StructuralDiff {
    int temp_count_delta = 0;                  // |temps(b)| - |temps(a)|
    std::set<std::uint64_t> const_set_diff;    // symmetric difference of constant values
    std::set<std::uint32_t> offset_set_diff;   // symmetric difference of GET/PUT offsets
    bool shape_equal = true;                   // statement kinds equal, NoOps ignored

    bool is_zero() const {
        return temp_count_delta == 0 && const_set_diff.empty() && offset_set_diff.empty() && shape_equal;
    }
    friend bool operator==(const StructuralDiff&, const StructuralDiff&) = default;
};

namespace detail {

struct Components {
    std::set<std::uint64_t> consts;
    std::set<std::uint32_t> offsets;
    std::vector<StmtKind> shape;
};

inline Components components(const IrSb& b) {
    Components c;
    auto visit_expr = [&](const Expr& x) {
        if (const auto* k = x.as<Const>()) c.consts.insert(k->value);
        else if (const auto* g = x.as<Get>()) c.offsets.insert(g->offset);
    };
    for (const auto& s : b.stmts) {
        if (std::holds_alternative<NoOp>(s)) continue;
        c.shape.push_back(kind_of(s));
        if (const auto* p = std::get_if<Put>(&s)) c.offsets.insert(p->offset);
        walk(s, visit_expr);
    }
    walk(b.next, visit_expr);
    return c;
}

template <class T>
std::set<T> symmetric_difference(const std::set<T>& a, const std::set<T>& b) {
    std::set<T> out;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

/// Index-aligned blocks compare kinds at positions where neither side is a
/// NoOp; otherwise the NoOp-free kind sequences must be equal.
inline bool shapes_match(const IrSb& a, const IrSb& b) {
    if (a.stmts.size() == b.stmts.size()) {
        for (std::size_t i = 0; i < a.stmts.size(); ++i) {
            const auto ka = kind_of(a.stmts[i]), kb = kind_of(b.stmts[i]);
            if (ka != StmtKind::NoOp && kb != StmtKind::NoOp && ka != kb) return false;
        }
        return true;
    }
    return components(a).shape == components(b).shape;
}

}  // namespace detail

inline StructuralDiff structural_compare(const IrSb& a, const IrSb& b) {
    auto ca = detail::components(a);
    auto cb = detail::components(b);
    StructuralDiff d;
    d.temp_count_delta = static_cast<int>(b.temps.size()) - static_cast<int>(a.temps.size());
    d.const_set_diff = detail::symmetric_difference(ca.consts, cb.consts);
    d.offset_set_diff = detail::symmetric_difference(ca.offsets, cb.offsets);
    d.shape_equal = detail::shapes_match(a, b);
    return d;
}

struct Verdict {
    enum class Kind : std::uint8_t { Equivalent, Mismatch, StructuralOnly, Rejected };

    Kind kind = Kind::Rejected;
    std::size_t trials = 0;                  // trials run (Equivalent: all of them)
    std::uint64_t counterexample_seed = 0;   // Mismatch only
    std::size_t counterexample_trial = 0;    // Mismatch only
    std::string detail;                      // first divergence or reason

    bool equivalent() const { return kind == Kind::Equivalent; }
};

inline std::string_view verdict_name(Verdict::Kind k) {
    switch (k) {
        case Verdict::Kind::Equivalent: return "Equivalent";
        case Verdict::Kind::Mismatch: return "Mismatch";
        case Verdict::Kind::StructuralOnly: return "StructuralOnly";
        case Verdict::Kind::Rejected: return "Rejected";
    }
    return "?";
}

/// How memory effects are compared. `FinalImage` is the relaxation used for
/// adjacent-store merging, which legitimately shortens the write list.
enum class WriteCompare : std::uint8_t { Ordered, FinalImage };

struct TrialOutcome {
    enum class Kind : std::uint8_t { Same, Diverged, OriginalFaulted };
    Kind kind = Kind::Same;
    std::string detail;
};

/// Runs both blocks from MachineState(state_seed) and compares observables.
inline TrialOutcome run_trial(const IrSb& a, const IrSb& b, std::uint64_t state_seed,
                              WriteCompare mode = WriteCompare::Ordered) {
    MachineState sa(state_seed), sb(state_seed);
    ExecResult ra, rb;
    try {
        ra = execute(sa, a);
    } catch (const EvalError& e) {
        return {TrialOutcome::Kind::OriginalFaulted, std::string("original faults: ") + e.what()};
    }
    try {
        rb = execute(sb, b);
    } catch (const EvalError& e) {
        return {TrialOutcome::Kind::Diverged, std::string("rewrite faults: ") + e.what()};
    }
    if (!(ra.exit == rb.exit))
        return {TrialOutcome::Kind::Diverged, "exit " + describe(ra.exit) + " vs " + describe(rb.exit)};
    if (auto off = first_guest_difference(sa, sb))
        return {TrialOutcome::Kind::Diverged, "guest byte " + std::to_string(*off) + ": " +
                                                  std::to_string(sa.guest_byte(*off)) + " vs " +
                                                  std::to_string(sb.guest_byte(*off))};
    if (mode == WriteCompare::Ordered) {
        const auto& wa = sa.write_log();
        const auto& wb = sb.write_log();
        const std::size_t n = std::min(wa.size(), wb.size());
        for (std::size_t i = 0; i < n; ++i)
            if (!(wa[i] == wb[i]))
                return {TrialOutcome::Kind::Diverged, "memory write #" + std::to_string(i) + " differs"};
        if (wa.size() != wb.size())
            return {TrialOutcome::Kind::Diverged, "memory write count " + std::to_string(wa.size()) + " vs " +
                                                      std::to_string(wb.size())};
    } else if (auto addr = first_memory_difference(sa, sb)) {
        return {TrialOutcome::Kind::Diverged, "memory byte at " + hex_addr(*addr) + " differs"};
    }
    return {};
}

/// Seed of trial `i`.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i) { return mix64(master, i); }

inline Verdict differential_verify(const IrSb& a, const IrSb& b, std::size_t trials, std::uint64_t seed,
                                   WriteCompare mode = WriteCompare::Ordered) {
    Verdict v;
    if (a.addr != b.addr) {
        v.detail = "block addresses differ";
        return v;
    }
    if (contains_opaque(a) || contains_opaque(b)) {
        if (structural_compare(a, b).is_zero() && print_irsb(a) == print_irsb(b)) {
            v.kind = Verdict::Kind::StructuralOnly;
            v.detail = "opaque operation; structurally identical";
        } else {
            v.detail = "opaque operation; structural difference";
        }
        return v;
    }
    for (std::size_t i = 0; i < trials; ++i) {
        const auto s = trial_seed(seed, i);
        auto out = run_trial(a, b, s, mode);
        if (out.kind == TrialOutcome::Kind::OriginalFaulted) {
            v.kind = Verdict::Kind::Rejected;
            v.trials = i + 1;
            v.detail = out.detail;
            return v;
        }
        if (out.kind == TrialOutcome::Kind::Diverged) {
            v.kind = Verdict::Kind::Mismatch;
            v.trials = i + 1;
            v.counterexample_seed = s;
            v.counterexample_trial = i;
            v.detail = out.detail;
            return v;
        }
    }
    v.kind = Verdict::Kind::Equivalent;
    v.trials = trials;
    return v;
}

struct VerifyPolicy {
    std::size_t trials = 64;
    std::uint64_t seed = 0;
    bool structural_required = false;
    WriteCompare writes = WriteCompare::Ordered;
};

/// Structural comparison (gating only when required) followed by
/// differential execution.
inline Verdict verify_rewrite(const IrSb& orig, const IrSb& opt, const VerifyPolicy& policy = {}) {
    if (policy.structural_required) {
        if (auto d = structural_compare(orig, opt); !d.is_zero()) {
            Verdict v;
            v.detail = "structural difference";
            return v;
        }
    }
    return differential_verify(orig, opt, policy.trials, policy.seed, policy.writes);
}

}  // namespace lift
