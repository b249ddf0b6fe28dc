// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails or exceeds its time budget.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "lift/bench.hpp"
#include "lift/corpus.hpp"
#include "lift/cost.hpp"
#include "lift/interp.hpp"
#include "lift/pipeline.hpp"
#include "lift/rules.hpp"
#include "lift/text.hpp"
#include "lift/verify.hpp"

using namespace lift;
namespace fs = std::filesystem;

namespace {

/// Outcome of one criterion: ok plus a one-line summary.
struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

struct Criterion {
    const char* name;
    double limit_s;
    std::function<Check()> body;
};

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("lift-accept-" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Check report_fidelity() {
    Check c;
    auto metrics = [](double cost, std::int64_t s, std::int64_t p, std::int64_t t, std::int64_t m) {
        MetricsReport r;
        r.program = "bigtest";
        r.exec_cost_units = cost;
        r.stmt_count = s;
        r.put_count = p;
        r.temp_count = t;
        r.max_temp_index = m;
        r.runs = 100;
        return r;
    };
    auto cmp = compare_reports(metrics(11.124952, 2532, 542, 106, 105), metrics(5.169818, 2315, 436, 101, 103));
    const auto pct = format_percent_change(cmp.percent_time_reduction);
    c.require(pct == "53.5% ↓", "percent rendered as '" + pct + "'");
    c.require(cmp.deltas.stmt_count == 217 && cmp.deltas.put_count == 106 && cmp.deltas.temp_count == 5 &&
                  cmp.deltas.max_temp_index == 2,
              "deltas differ from 217/106/5/2");
    const auto table = render_table(cmp);
    for (const char* cell : {"53.5% ↓", "217 ↓", "106 ↓", "5 ↓", "2 ↓", "11.124952", "5.169818", "t105", "t103"})
        c.require(table.find(cell) != std::string::npos, std::string("table lacks '") + cell + "'");
    c.require(comparison_from_json(nlohmann::json::parse(render_report(cmp, ReportFormat::Structured))) == cmp,
              "structured report does not round-trip");
    if (c.ok) c.detail = pct + ", deltas 217/106/5/2";
    return c;
}

Check rule_effectiveness() {
    Check c;
    GeneratorConfig gc;
    gc.blocks = 50;
    gc.stmts_per_block = 40;
    gc.redundancy_rate = 0.3;
    gc.seed = 42;
    auto gen = generate(gc);
    c.require(gen.truth.removable.size() == 600, "ground truth has " + std::to_string(gen.truth.removable.size()) +
                                                     " entries, expected 600");

    const auto dir = scratch_dir("corpus");
    fs::create_directories(dir);
    write_file(dir / "corpus.vir", print_program(gen.program));
    RunConfig cfg;
    cfg.backend.kind = BackendKind::Rule;
    cfg.k = rankable_count(gen.program);
    cfg.trials = 64;
    cfg.seed = 42;
    cfg.inputs = {(dir / "corpus.vir").string()};
    cfg.out_dir = (dir / "out").string();
    std::ostringstream out, diag;
    const int rc = run_pipeline(cfg, out, diag);
    c.require(rc == kExitOk, "pipeline exit code " + std::to_string(rc) + ": " + diag.str());
    if (!c.ok) return c;

    auto log = nlohmann::json::parse(read_file((dir / "out/rewrite_log.json").string()));
    std::set<std::pair<std::uint64_t, std::size_t>> retained;
    std::size_t not_equivalent = 0;
    for (const auto& e : log.at("entries")) {
        if (e.at("outcome") != "retained") continue;
        retained.insert({std::stoull(e.at("block_addr").get<std::string>(), nullptr, 16),
                         e.at("stmt_index").get<std::size_t>()});
        if (e.at("verdict").at("kind") != "Equivalent" || e.at("verdict").at("trials") != 64) ++not_equivalent;
    }
    std::size_t hit = 0;
    for (const auto& t : gen.truth.removable) hit += retained.count({t.block_addr, t.stmt_index});

    // Independent whole-program check on the written output.
    auto optimized = load_program((dir / "out/optimized.vir").string());
    std::size_t block_failures = 0;
    for (const auto& [addr, b] : gen.program.blocks)
        if (!differential_verify(b, optimized.blocks.at(addr), 64, mix64(7, addr), WriteCompare::FinalImage)
                 .equivalent())
            ++block_failures;

    auto report = comparison_from_json(nlohmann::json::parse(read_file((dir / "out/report.json").string())));
    const double needed = 0.95 * static_cast<double>(gen.truth.removable.size());
    c.require(static_cast<double>(hit) >= needed, "only " + std::to_string(hit) + " ground-truth redundancies removed");
    c.require(not_equivalent == 0, std::to_string(not_equivalent) + " retained rewrites lack an Equivalent verdict");
    c.require(block_failures == 0, std::to_string(block_failures) + " optimized blocks differ from the originals");
    c.require(!log.at("unexpected_mismatch").get<bool>(), "unexpected mismatch reported");
    c.require(report.deltas.stmt_count >= 500, "stmt_count fell by " + std::to_string(report.deltas.stmt_count));
    c.require(report.percent_time_reduction >= 10.0,
              "cost-units fell by " + fmt("%.2f%%", report.percent_time_reduction));
    if (c.ok)
        c.detail = std::to_string(hit) + "/600 removed, " + std::to_string(retained.size()) + " retained, stmts -" +
                   std::to_string(report.deltas.stmt_count) + ", cost " +
                   fmt("-%.1f%%", report.percent_time_reduction);
    return c;
}

Check mutation_kill() {
    Check c;
    GeneratorConfig gc;
    gc.blocks = 200;
    gc.stmts_per_block = 24;
    gc.redundancy_rate = 0.0;
    gc.seed = 2024;
    auto gen = generate(gc);
    std::mt19937_64 rng(99);
    std::size_t killed = 0, replayed = 0, n = 0;
    // The carrier sits right after the IMark, before any side exit, and
    // writes an offset nothing else in the block touches. The mutated
    // constant enters the Put through a 64-bit Add, which is a bijection.
    constexpr std::uint32_t kCarrierOffset = 4000;
    for (const auto& [addr, block] : gen.program.blocks) {
        ++n;
        const std::uint64_t k = rng();
        const std::uint64_t flip = std::uint64_t{1} << (rng() % 64);
        auto carrier = [&](std::uint64_t v) -> Statement {
            return Put{kCarrierOffset, mk_binop({OpKind::Add, Ty::I64}, mk_get(16, Ty::I64), mk_const(v, Ty::I64))};
        };
        IrSb orig = block, mutant = block;
        orig.stmts.insert(orig.stmts.begin() + 1, carrier(k));
        mutant.stmts.insert(mutant.stmts.begin() + 1, carrier(k ^ flip));
        if (!is_valid(orig) || !is_valid(mutant)) {
            c.require(false, "carrier made block " + hex_addr(addr) + " invalid");
            break;
        }
        const std::uint64_t seed = mix64(5, addr);
        auto v = differential_verify(orig, mutant, 64, seed);
        if (v.kind != Verdict::Kind::Mismatch) continue;
        ++killed;
        auto again = run_trial(orig, mutant, v.counterexample_seed);
        if (v.counterexample_seed == trial_seed(seed, v.counterexample_trial) &&
            again.kind == TrialOutcome::Kind::Diverged && again.detail == v.detail)
            ++replayed;
    }
    c.require(n == 200, "generated " + std::to_string(n) + " blocks");
    c.require(killed == n, "killed " + std::to_string(killed) + "/" + std::to_string(n));
    c.require(replayed == killed, "replayed " + std::to_string(replayed) + "/" + std::to_string(killed));
    if (c.ok) c.detail = std::to_string(killed) + "/200 killed, all counterexamples replay";
    return c;
}

/// Plain 8-bit reference semantics, written independently of the interpreter.
std::optional<std::uint64_t> ref8(OpKind k, std::uint8_t a, std::uint8_t b) {
    const auto sa = static_cast<std::int8_t>(a), sb = static_cast<std::int8_t>(b);
    switch (k) {
        case OpKind::Add: return static_cast<std::uint8_t>(a + b);
        case OpKind::Sub: return static_cast<std::uint8_t>(a - b);
        case OpKind::Mul: return static_cast<std::uint8_t>(a * b);
        case OpKind::And: return static_cast<std::uint8_t>(a & b);
        case OpKind::Or: return static_cast<std::uint8_t>(a | b);
        case OpKind::Xor: return static_cast<std::uint8_t>(a ^ b);
        case OpKind::Shl: return b >= 8 ? 0 : static_cast<std::uint8_t>(a << b);
        case OpKind::Shr: return b >= 8 ? 0 : static_cast<std::uint8_t>(a >> b);
        case OpKind::Sar: return static_cast<std::uint8_t>(sa >> (b >= 8 ? 7 : b));
        case OpKind::CmpEQ: return a == b;
        case OpKind::CmpNE: return a != b;
        default: (void)sb; return std::nullopt;
    }
}

Check rule_soundness() {
    Check c;
    std::vector<ExprPtr> consts;
    for (unsigned v = 0; v < 256; ++v) consts.push_back(mk_const(v, Ty::I8));
    const ExprPtr x = mk_tmp(0);
    const TempTypes temps = {{0, Ty::I8}};
    MachineState st(0);
    std::size_t cases = 0;

    auto same_value = [&](const ExprPtr& before, const ExprPtr& after) {
        ++cases;
        return eval_expr(st, before) == eval_expr(st, after) && type_of(before, temps) == type_of(after, temps);
    };

    const OpKind binops[] = {OpKind::Add, OpKind::Sub, OpKind::Mul, OpKind::And, OpKind::Or,
                             OpKind::Xor, OpKind::Shl, OpKind::Shr, OpKind::Sar, OpKind::CmpEQ, OpKind::CmpNE};

    // R1: every listed identity, with the unit on each side where it applies.
    struct Identity {
        OpKind k;
        std::uint8_t unit;
        bool left_too;
    };
    const Identity ids[] = {{OpKind::Add, 0, true},   {OpKind::Or, 0, true},   {OpKind::Xor, 0, true},
                            {OpKind::Sub, 0, false},  {OpKind::Shl, 0, false}, {OpKind::Shr, 0, false},
                            {OpKind::Sar, 0, false},  {OpKind::Mul, 1, true},  {OpKind::And, 0xff, true}};
    for (const auto& id : ids) {
        const Op op{id.k, Ty::I8};
        std::vector<ExprPtr> forms = {mk_binop(op, x, consts[id.unit])};
        if (id.left_too) forms.push_back(mk_binop(op, consts[id.unit], x));
        for (const auto& e : forms) {
            auto r = detail::identity_rule(*e);
            c.require(r.has_value(), "R1 does not fire on " + print_expr(e));
            if (!r) continue;
            for (unsigned v = 0; v < 256; ++v) {
                st.set_temp(0, v);
                c.require(same_value(e, *r), "R1 unsound on " + print_expr(e) + " at x=" + std::to_string(v));
            }
        }
    }

    // R2: every operand pair for every 8-bit binop, plus the unops.
    for (OpKind k : binops) {
        const Op op{k, Ty::I8};
        for (unsigned a = 0; a < 256; ++a)
            for (unsigned b = 0; b < 256; ++b) {
                auto e = mk_binop(op, consts[a], consts[b]);
                auto r = detail::fold_rule(*e);
                ++cases;
                const auto* folded = r ? (*r)->as<Const>() : nullptr;
                if (!folded) {
                    c.require(false, "R2 does not fold " + print_expr(e));
                    continue;
                }
                const auto interp = eval_expr(st, e);
                const auto ref = ref8(k, static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b));
                c.require(folded->value == interp && (!ref || *ref == interp) &&
                              folded->type == signature(op).result,
                          "R2 unsound on " + print_expr(e));
            }
    }
    const Op unops[] = {{OpKind::Not, Ty::I8}, {OpKind::WidenU, Ty::I8}};
    for (const Op& op : unops)
        for (unsigned a = 0; a < 256; ++a) {
            auto e = mk_unop(op, consts[a]);
            auto r = detail::fold_rule(*e);
            ++cases;
            c.require(r && (*r)->as<Const>() && (*r)->as<Const>()->value == eval_expr(st, e),
                      "R2 unsound on " + print_expr(e));
        }

    // R3: x op x.
    for (OpKind k : {OpKind::Xor, OpKind::Sub, OpKind::And, OpKind::Or}) {
        auto e = mk_binop({k, Ty::I8}, x, x);
        auto r = detail::self_cancel_rule(*e);
        c.require(r.has_value(), "R3 does not fire on " + print_expr(e));
        if (!r) continue;
        for (unsigned v = 0; v < 256; ++v) {
            st.set_temp(0, v);
            c.require(same_value(e, *r), "R3 unsound on " + print_expr(e));
        }
    }
    c.require(!detail::self_cancel_rule(*mk_binop({OpKind::Add, Ty::I8}, x, x)), "R3 fires on Add8(x,x)");

    // R4: Not(Not(x)).
    {
        const Op n8{OpKind::Not, Ty::I8};
        auto e = mk_unop(n8, mk_unop(n8, x));
        auto r = detail::double_not_rule(*e);
        c.require(r.has_value(), "R4 does not fire");
        for (unsigned v = 0; r && v < 256; ++v) {
            st.set_temp(0, v);
            c.require(same_value(e, *r) && static_cast<std::uint8_t>(~static_cast<std::uint8_t>(~v)) == v,
                      "R4 unsound at x=" + std::to_string(v));
        }
    }
    if (c.ok) c.detail = std::to_string(cases) + " cases, all bit-exact";
    return c;
}

Check parser_round_trip() {
    Check c;
    std::size_t blocks = 0, exact = 0, idempotent = 0;
    const auto& presets = preset_names();
    for (std::size_t i = 0; i < presets.size(); ++i) {
        auto gc = apply_preset(GeneratorConfig{}, presets[i]);
        gc.preset.reset();
        gc.blocks = 100;
        gc.redundancy_rate = 0.2;
        gc.seed = 1000 + i;
        for (const auto& [addr, b] : generate(gc).program.blocks) {
            ++blocks;
            const auto text = print_irsb(b);
            const auto parsed = parse_irsb(text);
            exact += parsed == b;
            idempotent += print_irsb(parsed) == text;
        }
    }
    c.require(blocks == 1000, "generated " + std::to_string(blocks) + " blocks");
    c.require(exact == blocks, "parse(print(b)) == b for " + std::to_string(exact) + "/" + std::to_string(blocks));
    c.require(idempotent == blocks, "print idempotent for " + std::to_string(idempotent));
    if (c.ok) c.detail = "1000/1000 exact and idempotent";
    return c;
}

Check interpreter_suite() {
    Check c;
    MachineState st(0);
    const Op add64{OpKind::Add, Ty::I64};
    c.require(eval_expr(st, mk_binop(add64, mk_const(~0ULL, Ty::I64), mk_const(1, Ty::I64))) == 0,
              "Add64 does not wrap");
    auto eq = mk_binop({OpKind::CmpEQ, Ty::I64}, mk_const(5, Ty::I64), mk_const(5, Ty::I64));
    c.require(eval_expr(st, eq) == 1 && type_of(eq, {}) == Ty::I1, "CmpEQ64(5,5) is not 1:I1");

    auto store_load = parse_irsb(
        "IRSB @ 0x1000 {\n   t0:Ity_I64 t1:Ity_I64\n"
        "   00 | t0 = GET:I64(offset=16)\n"
        "   01 | STOREle(t0) = 0x0123456789abcdef\n"
        "   02 | t1 = LDle:I64(t0)\n"
        "   03 | PUT(offset=24) = t1\n"
        "   NEXT: PUT(offset=184) = 0x2000; Ijk_Boring\n}\n");
    MachineState ms(3);
    execute(ms, store_load);
    const auto a = ms.read_guest(16, Ty::I64);
    c.require(ms.read_guest(24, Ty::I64) == 0x0123456789abcdefULL, "load after store differs");
    c.require(ms.mem_byte(a) == 0xef, "low byte not stored first");

    IrSb exit_first;
    exit_first.addr = 0x1000;
    exit_first.stmts = {Exit{mk_const(1, Ty::I1), 0x2000}, Put{0, mk_const(7, Ty::I64)}};
    exit_first.next = mk_const(0x3000, Ty::I64);
    MachineState es(9);
    const auto before = es.read_guest(0, Ty::I64);
    auto res = execute(es, exit_first);
    c.require(res.exit.kind == ExitOutcome::Kind::SideExit && res.exit.stmt_index == 0 && res.exit.target == 0x2000,
              "exit did not short-circuit");
    c.require(es.read_guest(0, Ty::I64) == before, "statement after a taken exit ran");

    bool div_fault = false;
    try {
        eval_expr(st, mk_binop({OpKind::DivU, Ty::I64}, mk_const(1, Ty::I64), mk_const(0, Ty::I64)));
    } catch (const EvalError& e) {
        div_fault = e.kind == EvalErrorKind::DivByZero;
    }
    c.require(div_fault, "DivU64 by zero did not raise DivByZero");
    if (c.ok) c.detail = "wraparound, CmpEQ64, little-endian, exit, DivByZero";
    return c;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + LIFT_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tree_bytes(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) out += fs::relative(f, root).string() + '\0' + read_file(f.string()) + '\0';
    return out;
}

Check replay_determinism() {
    Check c;
    const fs::path samples = fs::path(LIFT_SOURCE_DIR) / "samples";
    const auto a = scratch_dir("replay-a"), b = scratch_dir("replay-b");
    const std::string common = "pipeline --backend replay --seed 7 --config \"" + (samples / "config.json").string() +
                               "\" \"" + (samples / "hand.vir").string() + "\" --out ";
    const int ra = run_cli(common + "\"" + a.string() + "\"");
    const int rb = run_cli(common + "\"" + b.string() + "\"");
    c.require(ra == 0 && rb == 0, "pipeline exit codes " + std::to_string(ra) + ", " + std::to_string(rb));
    if (!c.ok) return c;
    const auto ta = tree_bytes(a), tb = tree_bytes(b);
    c.require(!ta.empty() && ta == tb, "output directories differ");
    auto log = nlohmann::json::parse(read_file((a / "rewrite_log.json").string()));
    c.require(log.at("summary").at("retained").get<int>() > 0, "replay retained nothing");
    if (c.ok) c.detail = "identical trees, " + std::to_string(ta.size()) + " bytes";
    return c;
}

Check cost_ordering() {
    Check c;
    Program p;
    // t0/t1 come from GETs (cost 2 each); only the three fixture statements
    // at indices 2..4 are compared.
    p.blocks.emplace(0x1000, parse_irsb("IRSB @ 0x1000 {\n   t0:Ity_I64 t1:Ity_I64 t2:Ity_I64\n"
                                        "   00 | t0 = GET:I64(offset=16)\n"
                                        "   01 | t1 = GET:I64(offset=32)\n"
                                        "   02 | PUT(offset=24) = t0\n"
                                        "   03 | t2 = Mul64(t0,t1)\n"
                                        "   04 | STOREle(t1) = t0\n"
                                        "   NEXT: PUT(offset=184) = 0x2000; Ijk_Boring\n}\n"));
    auto order = [&](const WeightTable& w) {
        std::vector<std::pair<std::size_t, CostUnits>> out;
        for (const auto& s : rank_statements(p, w, 5))
            if (s.stmt_index >= 2) out.emplace_back(s.stmt_index, s.cost);
        return out;
    };
    const auto base = order(WeightTable{});
    const std::vector<std::pair<std::size_t, CostUnits>> want = {{4, 6}, {3, 5}, {2, 1}};
    c.require(base == want, "default ranking is not Store(6) > Mul(5) > Put(1)");
    WeightTable doubled;
    for (auto* f : doubled.fields()) *f *= 2;
    const auto twice = order(doubled);
    bool same_order = twice.size() == base.size();
    for (std::size_t i = 0; same_order && i < base.size(); ++i)
        same_order = twice[i].first == base[i].first && twice[i].second == 2 * base[i].second;
    c.require(same_order, "ranking changed under doubled weights");
    if (c.ok) c.detail = "Store(6) > Mul(5) > Put(1), stable under x2";
    return c;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"report-fidelity", 1.0, report_fidelity},
        {"rule-backend-effectiveness", 60.0, rule_effectiveness},
        {"verifier-mutation-kill", 30.0, mutation_kill},
        {"rule-soundness-8bit", 10.0, rule_soundness},
        {"parser-round-trip", 10.0, parser_round_trip},
        {"interpreter-semantics", 1.0, interpreter_suite},
        {"replay-determinism", 30.0, replay_determinism},
        {"cost-model-ordering", 1.0, cost_ordering},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Check res;
        try {
            res = cr.body();
        } catch (const std::exception& e) {
            res.ok = false;
            res.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (res.ok && secs > cr.limit_s) {
            res.ok = false;
            res.detail = fmt("took %.2fs", secs) + fmt(", limit %.0fs", cr.limit_s);
        }
        failures += !res.ok;
        std::printf("%s %-28s %7.3fs  %s\n", res.ok ? "PASS" : "FAIL", cr.name, secs, res.detail.c_str());
    }
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / ("lift-accept-" + std::to_string(::getpid())), ec);
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
