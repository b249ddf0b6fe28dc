// lift: command-line front end for the IR optimizer.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lift/backend.hpp"
#include "lift/bench.hpp"
#include "lift/corpus.hpp"
#include "lift/cost.hpp"
#include "lift/optimize.hpp"
#include "lift/pipeline.hpp"
#include "lift/profile.hpp"
#include "lift/text.hpp"
#include "lift/verify.hpp"

namespace {

using namespace lift;

/// Raw flag values; unset means "fall back to config file, then default".
struct Flags {
    std::optional<std::string> backend, endpoint, model, out, format, replay, config, api_key_env;
    std::optional<std::size_t> top, runs, trials;
    std::optional<std::uint64_t> seed;
    bool wall_time = false;
    std::vector<std::string> inputs;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--backend", f.backend, "rewrite backend: rule|llm|replay");
    cmd->add_option("--endpoint", f.endpoint, "chat-completion endpoint URL");
    cmd->add_option("--model", f.model, "model name for the llm backend");
    cmd->add_option("--top", f.top, "number of top-cost statements to rewrite (default 10)");
    cmd->add_option("--runs", f.runs, "profiling runs per block (default 100)");
    cmd->add_option("--trials", f.trials, "verification trials per rewrite (default 64)");
    cmd->add_option("--seed", f.seed, "master seed (default 0)");
    cmd->add_option("--out", f.out, "output path");
    cmd->add_option("--format", f.format, "report format: table|structured");
    cmd->add_option("--replay", f.replay, "replay file for the replay backend");
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--api-key-env", f.api_key_env, "environment variable holding the API key (default LIFT_API_KEY)");
    cmd->add_flag("--wall-time", f.wall_time, "also report wall-clock seconds");
}

RunConfig merge(const Flags& f) {
    RunConfig cfg;
    if (f.config)
        apply_config_json(cfg, load_config_file(*f.config), std::filesystem::path(*f.config).parent_path());
    if (f.backend) cfg.backend.kind = parse_backend_kind(*f.backend);
    if (f.endpoint) cfg.backend.endpoint = *f.endpoint;
    if (f.model) cfg.backend.model_name = *f.model;
    if (f.replay) cfg.backend.replay_path = *f.replay;
    if (f.api_key_env) cfg.backend.api_key_env = *f.api_key_env;
    if (f.top) cfg.k = *f.top;
    if (f.runs) cfg.runs = *f.runs;
    if (f.trials) cfg.trials = *f.trials;
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.out_dir = *f.out;
    if (f.format) cfg.format = parse_report_format(*f.format);
    if (f.wall_time) cfg.wall_time = true;
    cfg.inputs = f.inputs;
    return cfg;
}

void emit(const std::optional<std::string>& out, const std::string& body) {
    if (out) write_file(*out, body);
    else std::cout << body;
}

int cmd_parse(const RunConfig&, const Flags& f) {
    std::string body;
    for (const auto& path : f.inputs) body += print_program(load_program(path));
    emit(f.out, body);
    return kExitOk;
}

int cmd_profile(const RunConfig& cfg, const Flags& f) {
    auto p = load_program(f.inputs.at(0));
    auto rep = profile_program(p, cfg.runs, cfg.seed, cfg.weights);
    std::string body;
    if (cfg.format == ReportFormat::Structured) {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : rep.blocks) {
            nlohmann::json j = {{"addr", hex_addr(b.addr)},       {"static_total", b.static_total},
                                {"mean_cost_units", b.mean_cost_units}, {"runs", b.runs},
                                {"faults", b.faults},              {"opaque", b.opaque}};
            if (cfg.wall_time) j["mean_wall_s"] = b.mean_wall_seconds;
            blocks.push_back(j);
        }
        body = nlohmann::json{{"program", p.name}, {"runs", cfg.runs}, {"seed", cfg.seed},
                              {"total_mean_cost_units", rep.total_mean_cost_units()}, {"blocks", blocks}}
                   .dump(2) +
               "\n";
    } else {
        char line[160];
        std::snprintf(line, sizeof line, "%-12s %12s %16s %8s\n", "Block", "Static", "Mean cost", "Faults");
        body += line;
        for (const auto& b : rep.blocks) {
            std::snprintf(line, sizeof line, "%-12s %12llu %16.6f %8zu%s\n", hex_addr(b.addr).c_str(),
                          static_cast<unsigned long long>(b.static_total), b.mean_cost_units, b.faults,
                          b.opaque ? "  (static only)" : "");
            body += line;
        }
        std::snprintf(line, sizeof line, "%-12s %12s %16.6f\n", "total", "", rep.total_mean_cost_units());
        body += line;
    }
    emit(f.out, body);
    return kExitOk;
}

int cmd_rank(const RunConfig& cfg, const Flags& f) {
    auto p = load_program(f.inputs.at(0));
    if (cfg.k == 0) return kExitOk;
    std::string body;
    for (const auto& s : rank_statements(p, cfg.weights, cfg.k)) {
        const auto& stmt = p.blocks.at(s.block_addr).stmts[s.stmt_index];
        body += hex_addr(s.block_addr) + "\t" + std::to_string(s.stmt_index) + "\t" + std::to_string(s.cost) +
                "\t" + print_statement(stmt) + "\n";
    }
    emit(f.out, body);
    return kExitOk;
}

int cmd_optimize(const RunConfig& cfg, const Flags& f) {
    auto p = load_program(f.inputs.at(0));
    RewriteBackend backend(cfg.backend);
    VerifyPolicy policy;
    policy.trials = cfg.trials;
    policy.seed = cfg.seed;
    auto res = optimize_program(p, cfg.k, backend, cfg.weights, policy);
    emit(f.out, print_program(res.program));
    std::cerr << to_json(res.log).dump(2) << "\n";
    return res.log.unexpected_mismatch ? kExitMismatch : kExitOk;
}

int cmd_verify(const RunConfig& cfg, const Flags& f) {
    if (f.inputs.size() != 2) throw ConfigError("verify takes exactly two files: ORIGINAL REWRITTEN");
    auto a = load_program(f.inputs[0]);
    auto b = load_program(f.inputs[1]);
    bool all_equal = true;
    nlohmann::json out = nlohmann::json::array();
    std::string table;
    for (const auto& [addr, blk] : a.blocks) {
        Verdict v;
        auto it = b.blocks.find(addr);
        if (it == b.blocks.end()) {
            v.kind = Verdict::Kind::Rejected;
            v.detail = "block missing from rewritten program";
        } else {
            v = differential_verify(blk, it->second, cfg.trials, block_verify_seed(cfg.seed, addr),
                                    WriteCompare::FinalImage);
        }
        all_equal = all_equal && v.equivalent();
        auto j = to_json(v);
        j["block_addr"] = hex_addr(addr);
        out.push_back(j);
        table += hex_addr(addr) + "\t" + std::string(verdict_name(v.kind)) + (v.detail.empty() ? "" : "\t" + v.detail) + "\n";
    }
    emit(f.out, cfg.format == ReportFormat::Structured ? out.dump(2) + "\n" : table);
    return all_equal ? kExitOk : kExitMismatch;
}

int cmd_bench(const RunConfig& cfg, const Flags& f) {
    if (f.inputs.empty() || f.inputs.size() > 2) throw ConfigError("bench takes BEFORE [AFTER]");
    auto before_p = load_program(f.inputs[0]);
    auto after_p = f.inputs.size() == 2 ? load_program(f.inputs[1]) : before_p;
    auto before = collect_metrics(before_p, cfg.runs, cfg.seed, cfg.weights, cfg.wall_time);
    auto after = collect_metrics(after_p, cfg.runs, cfg.seed, cfg.weights, cfg.wall_time);
    emit(f.out, render_report(compare_reports(before, after), cfg.format));
    return kExitOk;
}

struct GenFlags {
    std::optional<std::string> preset;
    std::optional<std::size_t> blocks, stmts;
    std::optional<double> rate;
};

int cmd_gen(const RunConfig& cfg, const Flags& f, const GenFlags& g) {
    GeneratorConfig gc;
    if (g.preset) gc = apply_preset(gc, *g.preset);
    if (g.blocks) gc.blocks = *g.blocks;
    if (g.stmts) gc.stmts_per_block = *g.stmts;
    if (g.rate) gc.redundancy_rate = *g.rate;
    gc.seed = cfg.seed;
    gc.preset.reset();
    auto gen = generate(gc);
    namespace fs = std::filesystem;
    const fs::path dir = f.out.value_or(".");
    fs::create_directories(dir);
    write_file(dir / (gc.name + ".vir"), print_program(gen.program));
    write_file(dir / (gc.name + ".truth"), gen.truth.format());
    std::cout << (dir / (gc.name + ".vir")).string() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lift: cost-guided IR optimizer with differential verification"};
    app.require_subcommand(1);

    Flags flags;
    GenFlags gen;
    struct Sub {
        const char* name;
        const char* help;
        bool needs_input;
    };
    const Sub subs[] = {
        {"parse", "parse, validate and print .vir files in canonical form", true},
        {"profile", "per-block dynamic cost profile", true},
        {"rank", "list the top-K statements by static cost", true},
        {"optimize", "rewrite the top-K statements and print the optimized program", true},
        {"verify", "differentially verify ORIGINAL against REWRITTEN, block by block", true},
        {"bench", "before/after metrics report", true},
        {"gen", "generate a synthetic corpus program with ground truth", false},
        {"pipeline", "run every phase and write results to --out", true},
    };
    std::vector<CLI::App*> cmds;
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, flags);
        if (s.needs_input) cmd->add_option("inputs", flags.inputs, "input .vir files")->required();
        cmds.push_back(cmd);
    }
    auto* gen_cmd = cmds[6];
    gen_cmd->add_option("--preset", gen.preset, "preset name");
    gen_cmd->add_option("--blocks", gen.blocks, "number of blocks");
    gen_cmd->add_option("--stmts", gen.stmts, "statements per block");
    gen_cmd->add_option("--rate", gen.rate, "redundancy rate in [0,1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    RunConfig cfg;
    try {
        cfg = merge(flags);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    const std::string which = app.get_subcommands().front()->get_name();
    try {
        if (which == "pipeline") return run_pipeline(cfg);
        if (which == "parse") return cmd_parse(cfg, flags);
        if (which == "profile") return cmd_profile(cfg, flags);
        if (which == "rank") return cmd_rank(cfg, flags);
        if (which == "optimize") return cmd_optimize(cfg, flags);
        if (which == "verify") return cmd_verify(cfg, flags);
        if (which == "bench") return cmd_bench(cfg, flags);
        if (which == "gen") return cmd_gen(cfg, flags, gen);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
