#pragma once

// Before/after metrics: execution time (deterministic cost-units, plus wall
// seconds when requested), IR statement count, PUT and STORE counts, temp
// count and highest temp index. Rendered as a fixed-width table or JSON.

#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lift/cost.hpp"
#include "lift/ir.hpp"
#include "lift/profile.hpp"

namespace lift {

struct MetricsReport {
    std::string program;
    double exec_cost_units = 0.0;    // sum over blocks of mean dynamic cost-units
    double exec_wall_seconds = 0.0;  // sum over blocks of mean wall time
    bool has_wall = false;           // wall seconds are reported
    std::int64_t stmt_count = 0;     // WrTmp + Put + Store + Exit
    std::int64_t put_count = 0;
    std::int64_t store_count = 0;
    std::int64_t temp_count = 0;     // declared temps referenced at least once
    std::int64_t max_temp_index = 0;
    std::size_t runs = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

struct StaticCounts {
    std::int64_t stmt_count = 0;
    std::int64_t put_count = 0;
    std::int64_t store_count = 0;
    std::int64_t temp_count = 0;
    std::int64_t max_temp_index = 0;
};

inline StaticCounts count_statements(const Program& p) {
    StaticCounts c;
    for (const auto& [addr, b] : p.blocks) {
        for (const auto& s : b.stmts) {
            switch (kind_of(s)) {
                case StmtKind::IMark: case StmtKind::NoOp: break;
                case StmtKind::Put: ++c.put_count; ++c.stmt_count; break;
                case StmtKind::Store: ++c.store_count; ++c.stmt_count; break;
                case StmtKind::WrTmp: case StmtKind::Exit: ++c.stmt_count; break;
            }
        }
        for (TempId t : referenced_temps(b)) {
            if (!b.temps.count(t)) continue;
            ++c.temp_count;
            c.max_temp_index = std::max<std::int64_t>(c.max_temp_index, t);
        }
    }
    return c;
}

inline MetricsReport collect_metrics(const Program& p, std::size_t runs, std::uint64_t seed,
                                     const WeightTable& w = {}, bool with_wall = false) {
    if (runs == 0) throw std::invalid_argument("collect_metrics: runs must be >= 1");
    MetricsReport m;
    m.program = p.name;
    m.runs = runs;
    m.seed = seed;
    auto c = count_statements(p);
    m.stmt_count = c.stmt_count;
    m.put_count = c.put_count;
    m.store_count = c.store_count;
    m.temp_count = c.temp_count;
    m.max_temp_index = c.max_temp_index;
    if (!p.blocks.empty()) {
        auto prof = profile_program(p, runs, seed, w);
        m.exec_cost_units = prof.total_mean_cost_units();
        if (with_wall) m.exec_wall_seconds = prof.total_mean_wall_seconds();
    }
    m.has_wall = with_wall;
    return m;
}

struct MetricDeltas {
    double exec_cost_units = 0.0;
    double exec_wall_seconds = 0.0;
    std::int64_t stmt_count = 0;
    std::int64_t put_count = 0;
    std::int64_t store_count = 0;
    std::int64_t temp_count = 0;
    std::int64_t max_temp_index = 0;

    friend bool operator==(const MetricDeltas&, const MetricDeltas&) = default;
};

struct ComparisonReport {
    std::string program;
    MetricsReport before;
    MetricsReport after;
    MetricDeltas deltas;                  // before - after
    double percent_time_reduction = 0.0;  // on cost-units; positive means faster

    friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

inline double percent_reduction(double before, double after) {
    return before > 0 ? (before - after) / before * 100.0 : 0.0;
}

inline ComparisonReport compare_reports(const MetricsReport& before, const MetricsReport& after) {
    if (before.runs != after.runs || before.seed != after.seed)
        throw std::invalid_argument("compare_reports: reports use different runs or seed");
    ComparisonReport c;
    c.program = before.program;
    c.before = before;
    c.after = after;
    c.deltas = {before.exec_cost_units - after.exec_cost_units,
                before.exec_wall_seconds - after.exec_wall_seconds,
                before.stmt_count - after.stmt_count,
                before.put_count - after.put_count,
                before.store_count - after.store_count,
                before.temp_count - after.temp_count,
                before.max_temp_index - after.max_temp_index};
    c.percent_time_reduction = percent_reduction(before.exec_cost_units, after.exec_cost_units);
    return c;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// "53.5% ↓" for a reduction, "4.0% ↑" for an increase, "0.0%" otherwise.
inline std::string format_percent_change(double percent, int decimals = 1) {
    const double scale = std::pow(10.0, decimals);
    const double rounded = std::round(std::fabs(percent) * scale) / scale;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f%%", decimals, rounded);
    if (rounded == 0.0) return buf;
    return std::string(buf) + (percent > 0 ? " ↓" : " ↑");
}

/// "217 ↓" for a reduction (before - after > 0), "3 ↑" for growth, "0".
inline std::string format_count_change(std::int64_t delta) {
    if (delta == 0) return "0";
    return std::to_string(delta > 0 ? delta : -delta) + (delta > 0 ? " ↓" : " ↑");
}

enum class ReportFormat : std::uint8_t { Table, Structured };

inline ReportFormat parse_report_format(std::string_view s) {
    if (s == "table") return ReportFormat::Table;
    if (s == "structured") return ReportFormat::Structured;
    throw ConfigError("unknown format '" + std::string(s) + "' (expected table|structured)");
}

inline std::string format_time(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string render_table(const ComparisonReport& c) {
    struct Row {
        const char* metric;
        std::string before, after, change;
    };
    const std::vector<Row> rows = {
        {"Execution Time", format_time(c.before.exec_cost_units), format_time(c.after.exec_cost_units),
         format_percent_change(c.percent_time_reduction)},
        {"IR Statement Count", std::to_string(c.before.stmt_count), std::to_string(c.after.stmt_count),
         format_count_change(c.deltas.stmt_count)},
        {"PUT Instruction Count", std::to_string(c.before.put_count), std::to_string(c.after.put_count),
         format_count_change(c.deltas.put_count)},
        {"Temporary Variable Count", std::to_string(c.before.temp_count), std::to_string(c.after.temp_count),
         format_count_change(c.deltas.temp_count)},
        {"Max Temp Variable Index", "t" + std::to_string(c.before.max_temp_index),
         "t" + std::to_string(c.after.max_temp_index), format_count_change(c.deltas.max_temp_index)},
    };
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-26s %-16s %-16s %s\n", "Metric", "Before", "After", "Change");
    out += line;
    out += std::string(26, '-') + " " + std::string(16, '-') + " " + std::string(16, '-') + " " +
           std::string(10, '-') + "\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-26s %-16s %-16s %s\n", r.metric, r.before.c_str(), r.after.c_str(),
                      r.change.c_str());
        out += line;
    }
    return out;
}

inline nlohmann::json to_json(const MetricsReport& m) {
    nlohmann::json j = {
        {"exec_time_cost_units", m.exec_cost_units},
        {"stmt_count", m.stmt_count},
        {"put_count", m.put_count},
        {"store_count", m.store_count},
        {"temp_count", m.temp_count},
        {"max_temp_index", m.max_temp_index},
    };
    if (m.has_wall) j["exec_time_wall_s"] = m.exec_wall_seconds;
    return j;
}

inline nlohmann::json to_json(const ComparisonReport& c) {
    const bool wall = c.before.has_wall && c.after.has_wall;
    nlohmann::json deltas = {
        {"exec_time_cost_units", c.deltas.exec_cost_units},
        {"stmt_count", c.deltas.stmt_count},
        {"put_count", c.deltas.put_count},
        {"store_count", c.deltas.store_count},
        {"temp_count", c.deltas.temp_count},
        {"max_temp_index", c.deltas.max_temp_index},
    };
    if (wall) deltas["exec_time_wall_s"] = c.deltas.exec_wall_seconds;
    return {
        {"program", c.program},
        {"runs", c.before.runs},
        {"seed", c.before.seed},
        {"before", to_json(c.before)},
        {"after", to_json(c.after)},
        {"deltas", deltas},
        {"percent_time_reduction", c.percent_time_reduction},
    };
}

namespace detail {

inline MetricsReport metrics_from_json(const nlohmann::json& j, const std::string& program, std::size_t runs,
                                       std::uint64_t seed) {
    MetricsReport m;
    m.program = program;
    m.runs = runs;
    m.seed = seed;
    m.exec_cost_units = j.at("exec_time_cost_units").get<double>();
    m.stmt_count = j.at("stmt_count").get<std::int64_t>();
    m.put_count = j.at("put_count").get<std::int64_t>();
    m.store_count = j.at("store_count").get<std::int64_t>();
    m.temp_count = j.at("temp_count").get<std::int64_t>();
    m.max_temp_index = j.at("max_temp_index").get<std::int64_t>();
    if (j.contains("exec_time_wall_s")) {
        m.has_wall = true;
        m.exec_wall_seconds = j.at("exec_time_wall_s").get<double>();
    }
    return m;
}

}  // namespace detail

inline ComparisonReport comparison_from_json(const nlohmann::json& j) {
    ComparisonReport c;
    c.program = j.at("program").get<std::string>();
    const auto runs = j.at("runs").get<std::size_t>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    c.before = detail::metrics_from_json(j.at("before"), c.program, runs, seed);
    c.after = detail::metrics_from_json(j.at("after"), c.program, runs, seed);
    const auto& d = j.at("deltas");
    c.deltas.exec_cost_units = d.at("exec_time_cost_units").get<double>();
    c.deltas.exec_wall_seconds = d.value("exec_time_wall_s", 0.0);
    c.deltas.stmt_count = d.at("stmt_count").get<std::int64_t>();
    c.deltas.put_count = d.at("put_count").get<std::int64_t>();
    c.deltas.store_count = d.at("store_count").get<std::int64_t>();
    c.deltas.temp_count = d.at("temp_count").get<std::int64_t>();
    c.deltas.max_temp_index = d.at("max_temp_index").get<std::int64_t>();
    c.percent_time_reduction = j.at("percent_time_reduction").get<double>();
    return c;
}

/// Byte-deterministic rendering in either format.
inline std::string render_report(const ComparisonReport& c, ReportFormat f) {
    if (f == ReportFormat::Table) return render_table(c);
    return to_json(c).dump(2) + "\n";
}

/// Multi-program summary of reductions, one row per program.
inline std::string render_summary(const std::vector<ComparisonReport>& reports) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-16s %-20s %-21s %s\n", "Program", "Execution Time",
                  "IR Statement Count", "Memory Instructions", "Temporary Variable Count");
    out += line;
    for (const auto& c : reports) {
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.2f%%", c.percent_time_reduction);
        std::snprintf(line, sizeof line, "%-14s %-16s %-20lld %-21lld %lld\n", c.program.c_str(), pct,
                      static_cast<long long>(c.deltas.stmt_count), static_cast<long long>(c.deltas.put_count),
                      static_cast<long long>(c.deltas.temp_count));
        out += line;
    }
    return out;
}

}  // namespace lift
