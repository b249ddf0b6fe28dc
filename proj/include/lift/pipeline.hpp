#pragma once

// End-to-end driver: parse -> profile -> rank -> optimize (verified) ->
// bench -> report, plus the run configuration and its JSON config file.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lift/backend.hpp"
#include "lift/bench.hpp"
#include "lift/cost.hpp"
#include "lift/optimize.hpp"
#include "lift/text.hpp"

namespace lift {

enum ExitCode : int {
    kExitOk = 0,
    kExitMismatch = 1,
    kExitInput = 2,
    kExitConfig = 3,
};

struct RunConfig {
    WeightTable weights;
    BackendConfig backend;
    std::size_t k = 10;
    std::size_t runs = 100;
    std::size_t trials = 64;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::string out_dir = "lift-out";
    ReportFormat format = ReportFormat::Table;
    bool wall_time = false;
};

/// Overlays the keys present in a JSON config document onto `cfg`.
/// Secrets are refused: the API key is only ever read from the environment.
/// A relative replay path is resolved against `base_dir` when one is given.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw ConfigError("config file must contain a JSON object");
    static const char* known[] = {"weights", "backend", "endpoint", "model", "top", "runs", "trials",
                                  "seed",    "out",     "format",   "replay", "max_parallel", "timeout_ms",
                                  "api_key_env", "wall_time"};
    for (const auto& [key, val] : j.items()) {
        if (key == "api_key" || key == "key")
            throw ConfigError("config file must not contain an API key; set it in the environment");
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        if (j.contains("weights")) {
            for (const auto& [name, v] : j.at("weights").items()) cfg.weights.set(name, v.get<CostUnits>());
        }
        if (j.contains("backend")) cfg.backend.kind = parse_backend_kind(j.at("backend").get<std::string>());
        if (j.contains("endpoint")) cfg.backend.endpoint = j.at("endpoint").get<std::string>();
        if (j.contains("model")) cfg.backend.model_name = j.at("model").get<std::string>();
        if (j.contains("replay")) {
            std::filesystem::path rp = j.at("replay").get<std::string>();
            if (rp.is_relative() && !base_dir.empty()) rp = base_dir / rp;
            cfg.backend.replay_path = rp.string();
        }
        if (j.contains("api_key_env")) cfg.backend.api_key_env = j.at("api_key_env").get<std::string>();
        if (j.contains("max_parallel")) cfg.backend.max_parallel = j.at("max_parallel").get<std::size_t>();
        if (j.contains("timeout_ms"))
            cfg.backend.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
        if (j.contains("top")) cfg.k = j.at("top").get<std::size_t>();
        if (j.contains("runs")) cfg.runs = j.at("runs").get<std::size_t>();
        if (j.contains("trials")) cfg.trials = j.at("trials").get<std::size_t>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
        if (j.contains("format")) cfg.format = parse_report_format(j.at("format").get<std::string>());
        if (j.contains("wall_time")) cfg.wall_time = j.at("wall_time").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file: ") + e.what());
    }
}

inline nlohmann::json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

/// Program name used for reports: the input file's stem.
inline std::string program_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

/// Parses and validates one input file; errors carry the file name.
inline Program load_program(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return parse_program(text, program_name(path));
    } catch (const ParseError& e) {
        throw ParseError(e.line, e.column, path + ": " + e.message, e.snippet);
    }
}

struct PipelineArtifacts {
    OptimizeResult result;
    ComparisonReport report;
};

/// One program through every phase; no I/O.
inline PipelineArtifacts optimize_and_measure(const Program& p, const RunConfig& cfg, const RewriteBackend& backend) {
    VerifyPolicy policy;
    policy.trials = cfg.trials;
    policy.seed = cfg.seed;
    auto before = collect_metrics(p, cfg.runs, cfg.seed, cfg.weights, cfg.wall_time);
    auto result = optimize_program(p, cfg.k, backend, cfg.weights, policy);
    auto after = collect_metrics(result.program, cfg.runs, cfg.seed, cfg.weights, cfg.wall_time);
    return {std::move(result), compare_reports(before, after)};
}

/// Runs the whole pipeline and writes, per input, `optimized.vir`,
/// `rewrite_log.json`, `report.json` and `report.txt`. With several inputs
/// each gets a subdirectory named after it plus a top-level `summary.txt`.
inline int run_pipeline(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& diag = std::cerr) {
    if (cfg.inputs.empty()) {
        diag << "error: no input files\n";
        return kExitConfig;
    }
    if (cfg.runs == 0 || cfg.trials == 0) {
        diag << "error: --runs and --trials must be >= 1\n";
        return kExitConfig;
    }

    // Parse everything before touching the output directory.
    std::vector<Program> programs;
    for (const auto& path : cfg.inputs) {
        try {
            programs.push_back(load_program(path));
        } catch (const Error& e) {
            diag << "error: " << e.what() << "\n";
            return kExitInput;
        }
    }

    std::optional<RewriteBackend> backend;
    try {
        backend.emplace(cfg.backend);
    } catch (const Error& e) {
        diag << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::vector<PipelineArtifacts> results;
    try {
        for (const auto& p : programs) results.push_back(optimize_and_measure(p, cfg, *backend));
    } catch (const Error& e) {
        diag << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    namespace fs = std::filesystem;
    bool mismatch = false;
    std::vector<ComparisonReport> reports;
    try {
        fs::create_directories(cfg.out_dir);
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            fs::path dir = cfg.out_dir;
            if (results.size() > 1) {
                dir /= programs[i].name;
                fs::create_directories(dir);
            }
            write_file(dir / "optimized.vir", print_program(r.result.program));
            write_file(dir / "rewrite_log.json", to_json(r.result.log).dump(2) + "\n");
            write_file(dir / "report.json", render_report(r.report, ReportFormat::Structured));
            write_file(dir / "report.txt", render_report(r.report, ReportFormat::Table));
            out << render_report(r.report, cfg.format);
            if (r.result.log.unexpected_mismatch) {
                mismatch = true;
                diag << "error: " << programs[i].name << ": a rule rewrite failed verification\n";
            }
            reports.push_back(r.report);
        }
        if (results.size() > 1) write_file(fs::path(cfg.out_dir) / "summary.txt", render_summary(reports));
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return mismatch ? kExitMismatch : kExitOk;
}

}  // namespace lift
