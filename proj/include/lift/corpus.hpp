#pragma once

// Seeded generator of synthetic programs with a known set of injected
// redundancies. Each injected statement is tagged with the peephole rule
// that should remove or simplify it; everything else is built so that no
// rule applies to it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lift/interp.hpp"
#include "lift/ir.hpp"
#include "lift/text.hpp"

namespace lift {

/// Relative weights of the non-redundant statement kinds.
struct OpMix {
    double get = 3;
    double arith = 4;
    double mul = 1;
    double shift = 1;
    double convert = 1;
    double load = 1;
    double store = 1;
    double put = 2;
    double exit = 0.3;
    double ite = 0.5;
    double imark = 0.3;
};

struct GeneratorConfig {
    std::size_t blocks = 10;
    std::size_t stmts_per_block = 30;  // every statement, IMarks included
    double redundancy_rate = 0.2;
    OpMix op_mix;
    std::uint64_t seed = 0;
    std::optional<std::string> preset;
    std::string name = "synthetic";
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"counter", "branching", "matrix",  "methcall", "objinst",
                                                   "heapsort", "random",    "bigtest", "bigprog",  "complexprog"};
    return names;
}

/// Applies a named preset's (blocks, stmts_per_block, op_mix) to `cfg`.
inline GeneratorConfig apply_preset(GeneratorConfig cfg, const std::string& name) {
    OpMix m;
    if (name == "counter") {
        cfg.blocks = 8, cfg.stmts_per_block = 24;
        m.arith = 6, m.mul = 0.5;
    } else if (name == "branching") {
        cfg.blocks = 12, cfg.stmts_per_block = 28;
        m.exit = 1.5, m.ite = 2;
    } else if (name == "matrix") {
        cfg.blocks = 10, cfg.stmts_per_block = 32;
        m.mul = 4, m.load = 3, m.store = 2;
    } else if (name == "methcall") {
        cfg.blocks = 10, cfg.stmts_per_block = 20;
        m.put = 4, m.get = 4;
    } else if (name == "objinst") {
        cfg.blocks = 12, cfg.stmts_per_block = 24;
        m.store = 3, m.put = 3;
    } else if (name == "heapsort") {
        cfg.blocks = 16, cfg.stmts_per_block = 32;
        m.load = 3, m.store = 3, m.exit = 0.8;
    } else if (name == "random") {
        cfg.blocks = 20, cfg.stmts_per_block = 30;
    } else if (name == "bigtest") {
        cfg.blocks = 60, cfg.stmts_per_block = 42;
        m.mul = 2, m.load = 2, m.store = 2;
    } else if (name == "bigprog") {
        cfg.blocks = 48, cfg.stmts_per_block = 40;
    } else if (name == "complexprog") {
        cfg.blocks = 64, cfg.stmts_per_block = 48;
        m.mul = 2, m.shift = 2, m.convert = 2, m.exit = 0.6;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    cfg.op_mix = m;
    cfg.preset = name;
    cfg.name = name;
    return cfg;
}

struct GroundTruthEntry {
    std::uint64_t block_addr;
    std::size_t stmt_index;
    std::string rule;  // R1, R5, R6 or R7

    friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

struct GroundTruth {
    std::vector<GroundTruthEntry> removable;

    /// Sidecar file body: `addr \t index \t rule` per line.
    std::string format() const {
        std::string out;
        for (const auto& e : removable)
            out += hex_addr(e.block_addr) + "\t" + std::to_string(e.stmt_index) + "\t" + e.rule + "\n";
        return out;
    }
};

struct GeneratedProgram {
    Program program;
    GroundTruth truth;
};

inline std::size_t redundancies_per_block(const GeneratorConfig& cfg) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(cfg.stmts_per_block) * cfg.redundancy_rate + 1e-9));
}

namespace detail {

inline constexpr std::uint32_t kInputBase = 16;
inline constexpr std::uint32_t kInputRegs = 16;
inline constexpr std::uint32_t kOutputBase = 256;

class BlockBuilder {
public:
    BlockBuilder(const GeneratorConfig& cfg, std::uint64_t addr, std::uint64_t seed)
        : cfg_(cfg), rng_(seed) {
        block_.addr = addr;
    }

    IrSb build(GroundTruth& truth) {
        const std::size_t n = cfg_.stmts_per_block;
        const std::size_t r = redundancies_per_block(cfg_);
        if (n == 0) throw ConfigError("stmts_per_block must be >= 1");
        if (cfg_.redundancy_rate < 0 || cfg_.redundancy_rate > 1) throw ConfigError("redundancy_rate must be in [0,1]");
        if (r > 0 && r + 3 > n)
            throw ConfigError("redundancy rate too high: at most stmts_per_block - 3 injections per block");

        // Injection positions come from [3, n); 0 is an IMark, 1 and 2 are GETs.
        std::vector<std::size_t> slots;
        for (std::size_t i = 3; i < n; ++i) slots.push_back(i);
        for (std::size_t i = 0; i < r; ++i) std::swap(slots[i], slots[i + below(slots.size() - i)]);
        std::vector<char> injected(n, 0);
        std::vector<std::string> kinds(r, "X");
        for (std::size_t i = 0; i < r / 8; ++i) kinds[i] = "R1";
        for (std::size_t i = kinds.size(); i > 1; --i) std::swap(kinds[i - 1], kinds[below(i)]);
        std::map<std::size_t, std::string> kind_at;
        for (std::size_t i = 0; i < r; ++i) {
            injected[slots[i]] = 1;
            kind_at[slots[i]] = kinds[i];
        }

        constexpr std::size_t kNone = static_cast<std::size_t>(-1);
        std::size_t forced_store_at = kNone;
        std::optional<ExprPtr> forced_store_addr;
        std::vector<std::uint32_t> pending_puts;

        auto base_after = [&](std::size_t p) {
            std::size_t c = 0;
            for (std::size_t i = p + 1; i < n; ++i) c += !injected[i];
            return c;
        };

        for (std::size_t p = 0; p < n; ++p) {
            if (p == 0) {
                emit(IMark{block_.addr, 4, 0});
                continue;
            }
            if (injected[p]) {
                std::string kind = kind_at[p];
                if (kind == "X") {
                    std::vector<std::string> allowed = {"R7"};
                    const std::size_t free_after = base_after(p) - (forced_store_at != kNone ? 1 : 0);
                    if (p + 1 < n && !injected[p + 1] && free_after >= pending_puts.size() + 1) allowed.push_back("R5");
                    if (free_after >= pending_puts.size() + 1) allowed.push_back("R6");
                    kind = allowed[below(allowed.size())];
                }
                truth.removable.push_back({block_.addr, block_.stmts.size(), kind});
                if (kind == "R1") {
                    emit_identity();
                } else if (kind == "R5") {
                    auto addr = fresh_store_address();
                    emit(Store{addr, operand()});
                    forced_store_at = p + 1;
                    forced_store_addr = addr;
                } else if (kind == "R6") {
                    auto off = fresh_output();
                    emit(Put{off, operand()});
                    pending_puts.push_back(off);
                } else {
                    emit_dead();
                }
                continue;
            }
            if (forced_store_at == p) {
                emit(Store{*forced_store_addr, operand()});
                forced_store_at = kNone;
                continue;
            }
            if (!pending_puts.empty()) {
                emit(Put{pending_puts.front(), operand()});
                pending_puts.erase(pending_puts.begin());
                continue;
            }
            emit_base(p < 3, base_after(p));
        }

        std::vector<TempId> rest(unread_.begin(), unread_.end());
        if (rest.empty()) {
            block_.next = mk_const(block_.addr + 0x1000, Ty::I64);
        } else {
            ExprPtr e = mk_tmp(rest[0]);
            for (std::size_t i = 1; i < rest.size(); ++i) e = mk_binop({OpKind::Add, Ty::I64}, e, mk_tmp(rest[i]));
            block_.next = e;
        }
        return std::move(block_);
    }

private:
    std::size_t below(std::size_t n) { return n <= 1 ? 0 : static_cast<std::size_t>(rng_() % n); }

    std::uint64_t nonidentity_const() {
        // Never 0, 1 or all-ones, so no identity rule matches.
        return 2 + rng_() % 0xFFFD;
    }

    void emit(Statement s) { block_.stmts.push_back(std::move(s)); }

    TempId new_temp() {
        TempId t = next_temp_++;
        block_.temps[t] = Ty::I64;
        return t;
    }

    void define(TempId t, ExprPtr rhs, bool live = true) {
        emit(WrTmp{t, std::move(rhs)});
        if (live) {
            pool_.push_back(t);
            unread_.push_back(t);
        }
    }

    /// Any readable temp, preferring ones nobody has read yet.
    ExprPtr operand(std::optional<TempId> avoid = std::nullopt) {
        for (std::size_t i = 0; i < unread_.size(); ++i) {
            if (avoid && unread_[i] == *avoid) continue;
            TempId t = unread_[i];
            unread_.erase(unread_.begin() + static_cast<std::ptrdiff_t>(i));
            return mk_tmp(t);
        }
        std::vector<TempId> choices;
        for (TempId t : pool_)
            if (!avoid || t != *avoid) choices.push_back(t);
        if (choices.empty()) return mk_const(nonidentity_const(), Ty::I64);
        return mk_tmp(choices[below(choices.size())]);
    }

    std::pair<ExprPtr, ExprPtr> two_operands() {
        auto a = operand();
        std::optional<TempId> avoid;
        if (const auto* t = a->as<RdTmp>()) avoid = t->tmp;
        auto b = operand(avoid);
        return {a, b};
    }

    std::uint32_t fresh_output() { return kOutputBase + 8 * next_output_++; }

    ExprPtr fresh_store_address() {
        const std::uint64_t disp = 0x100 + 0x40 * next_store_++;
        return mk_binop({OpKind::Add, Ty::I64}, operand(), mk_const(disp, Ty::I64));
    }

    void emit_get() {
        const std::uint32_t off = kInputBase + 8 * static_cast<std::uint32_t>(below(kInputRegs));
        define(new_temp(), mk_get(off, Ty::I64));
    }

    void emit_identity() {
        static constexpr OpKind kinds[] = {OpKind::Add, OpKind::Sub, OpKind::Or, OpKind::Xor, OpKind::Mul, OpKind::And};
        const OpKind k = kinds[below(std::size(kinds))];
        std::uint64_t ident = 0;
        if (k == OpKind::Mul) ident = 1;
        if (k == OpKind::And) ident = ~std::uint64_t{0};
        auto a = operand();
        define(new_temp(), mk_binop({k, Ty::I64}, a, mk_const(ident, Ty::I64)));
    }

    void emit_dead() {
        static constexpr OpKind kinds[] = {OpKind::Add, OpKind::Sub, OpKind::Xor, OpKind::Mul, OpKind::Or};
        auto [a, b] = two_operands();
        define(new_temp(), mk_binop({kinds[below(std::size(kinds))], Ty::I64}, a, b), /*live=*/false);
    }

    void emit_base(bool prologue, std::size_t base_left) {
        if (prologue) {
            emit_get();
            return;
        }
        const auto& m = cfg_.op_mix;
        // Each remaining base slot must be able to consume one unread temp.
        const bool must_consume = unread_.size() + 1 > base_left + 1;
        std::vector<std::pair<double, int>> menu = {
            {must_consume ? 0 : m.get, 0}, {m.arith, 1},   {m.mul, 2},  {m.shift, 3},
            {m.convert, 4},                {m.load, 5},    {m.store, 6}, {m.put, 7},
            {exits_ < 2 ? m.exit : 0, 8},  {m.ite, 9},     {m.imark, 10}};
        if (must_consume) menu = {{1, 7}, {unread_.size() >= 2 && exits_ < 2 ? 1.0 : 0.0, 8}};
        double total = 0;
        for (auto& [w, k] : menu) total += w;
        int kind = 1;
        if (total > 0) {
            double x = static_cast<double>(rng_() >> 11) / static_cast<double>(1ULL << 53) * total;
            for (auto& [w, k] : menu) {
                if (x < w) {
                    kind = k;
                    break;
                }
                x -= w;
            }
        }
        switch (kind) {
            case 0: emit_get(); break;
            case 1: {
                static constexpr OpKind kinds[] = {OpKind::Add, OpKind::Sub, OpKind::And, OpKind::Or, OpKind::Xor};
                const OpKind k = kinds[below(std::size(kinds))];
                auto a = operand();
                ExprPtr b = below(2) ? operand(a->is<RdTmp>() ? std::optional{a->as<RdTmp>()->tmp} : std::nullopt)
                                     : mk_const(nonidentity_const(), Ty::I64);
                if (same_expr(a, b)) b = mk_const(nonidentity_const(), Ty::I64);
                define(new_temp(), mk_binop({k, Ty::I64}, a, b));
                break;
            }
            case 2: {
                const bool by_const = below(3) == 0;
                auto [a, b] = by_const ? std::pair{operand(), mk_const(nonidentity_const(), Ty::I64)} : two_operands();
                if (same_expr(a, b)) b = mk_const(nonidentity_const(), Ty::I64);
                define(new_temp(), mk_binop({OpKind::Mul, Ty::I64}, a, b));
                break;
            }
            case 3: {
                static constexpr OpKind kinds[] = {OpKind::Shl, OpKind::Shr, OpKind::Sar};
                define(new_temp(), mk_binop({kinds[below(3)], Ty::I64}, operand(), mk_const(1 + below(63), Ty::I8)));
                break;
            }
            case 4: {
                auto a = operand();
                ExprPtr e;
                switch (below(3)) {
                    case 0: e = mk_unop({OpKind::WidenU, Ty::I32}, mk_unop({OpKind::Narrow, Ty::I32}, a)); break;
                    case 1: e = mk_unop({OpKind::WidenU, Ty::I8}, mk_unop({OpKind::Narrow, Ty::I8}, a)); break;
                    default: e = mk_unop({OpKind::WidenS, Ty::I32}, mk_unop({OpKind::Narrow, Ty::I32}, a)); break;
                }
                define(new_temp(), e);
                break;
            }
            case 5: {
                auto addr = mk_binop({OpKind::Add, Ty::I64}, operand(), mk_const(8 * (1 + below(64)), Ty::I64));
                define(new_temp(), mk_load(Ty::I64, addr));
                break;
            }
            case 6: {
                auto addr = fresh_store_address();
                emit(Store{addr, operand()});
                break;
            }
            case 7: emit(Put{fresh_output(), operand()}); break;
            case 8: {
                auto [a, b] = two_operands();
                if (same_expr(a, b)) b = mk_const(nonidentity_const(), Ty::I64);
                ++exits_;
                emit(Exit{mk_binop({OpKind::CmpLTU, Ty::I64}, a, b), block_.addr + 0x800 + 0x10 * exits_,
                          JumpKind::Boring, kDefaultPcOffset});
                break;
            }
            case 9: {
                auto [a, b] = two_operands();
                if (same_expr(a, b)) b = mk_const(nonidentity_const(), Ty::I64);
                define(new_temp(), mk_ite(mk_binop({OpKind::CmpLTU, Ty::I64}, a, b), a, b));
                break;
            }
            default:
                emit(IMark{block_.addr + 4 * block_.stmts.size(), 4, 0});
                break;
        }
    }

    const GeneratorConfig& cfg_;
    std::mt19937_64 rng_;
    IrSb block_;
    TempId next_temp_ = 0;
    std::uint32_t next_output_ = 0;
    std::uint64_t next_store_ = 0;
    int exits_ = 0;
    std::vector<TempId> pool_;
    std::vector<TempId> unread_;
};

}  // namespace detail

/// Deterministic: the same configuration always prints the same program.
inline GeneratedProgram generate(const GeneratorConfig& cfg_in) {
    GeneratorConfig cfg = cfg_in.preset ? apply_preset(cfg_in, *cfg_in.preset) : cfg_in;
    if (cfg_in.preset) {
        cfg.redundancy_rate = cfg_in.redundancy_rate;
        cfg.seed = cfg_in.seed;
    }
    GeneratedProgram out;
    out.program.name = cfg.name;
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
        const std::uint64_t addr = 0x400000 + 0x1000 * b;
        detail::BlockBuilder builder(cfg, addr, mix64(cfg.seed, b));
        out.program.blocks.emplace(addr, builder.build(out.truth));
    }
    return out;
}

}  // namespace lift
