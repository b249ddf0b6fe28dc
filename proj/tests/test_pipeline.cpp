#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "lift/corpus.hpp"
#include "lift/pipeline.hpp"

using namespace lift;
using namespace lift::test;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = LIFT_SOURCE_DIR;
const std::string kCli = LIFT_CLI_PATH;

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("lift-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir.parent_path());
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tree_digest(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) out += fs::relative(f, root).string() + "\n" + read_file(f.string()) + "\n";
    return out;
}

RunConfig quiet(const fs::path& out, std::vector<std::string> inputs) {
    RunConfig cfg;
    cfg.out_dir = out.string();
    cfg.inputs = std::move(inputs);
    cfg.runs = 10;
    cfg.trials = 32;
    return cfg;
}

}  // namespace

TEST(Pipeline, ZeroBudgetKeepsProgram) {
    auto out = scratch("k0");
    auto cfg = quiet(out, {(kSource / "samples/hand.vir").string()});
    cfg.k = 0;
    std::ostringstream o, d;
    ASSERT_EQ(run_pipeline(cfg, o, d), kExitOk) << d.str();
    EXPECT_EQ(read_file((out / "optimized.vir").string()), print_program(load_program(cfg.inputs[0])));
    auto report = nlohmann::json::parse(read_file((out / "report.json").string()));
    EXPECT_EQ(report["deltas"]["stmt_count"], 0);
    EXPECT_EQ(report["percent_time_reduction"], 0.0);
    EXPECT_EQ(o.str(), read_file((out / "report.txt").string()));
}

TEST(Pipeline, MalformedInputWritesNothing) {
    auto dir = scratch("bad");
    fs::create_directories(dir);
    write_file(dir / "bad.vir", "IRSB @ 0x1000 {\n   00 | t0 = \n}\n");
    auto cfg = quiet(dir / "out", {(dir / "bad.vir").string()});
    std::ostringstream o, d;
    EXPECT_EQ(run_pipeline(cfg, o, d), kExitInput);
    EXPECT_FALSE(fs::exists(dir / "out"));
    EXPECT_NE(d.str().find("bad.vir"), std::string::npos);
}

TEST(Pipeline, RuleBackendOutputsReparse) {
    auto out = scratch("rule");
    auto cfg = quiet(out, {(kSource / "samples/hand.vir").string()});
    cfg.k = 30;
    std::ostringstream o, d;
    ASSERT_EQ(run_pipeline(cfg, o, d), kExitOk) << d.str();
    auto opt = load_program((out / "optimized.vir").string());
    for (const auto& [addr, b] : opt.blocks) EXPECT_TRUE(is_valid(b));
    auto log = nlohmann::json::parse(read_file((out / "rewrite_log.json").string()));
    EXPECT_GE(log["summary"]["retained"].get<int>(), 7);
    EXPECT_FALSE(log["unexpected_mismatch"].get<bool>());
    auto report = comparison_from_json(nlohmann::json::parse(read_file((out / "report.json").string())));
    EXPECT_GT(report.deltas.stmt_count, 0);
    EXPECT_GT(report.percent_time_reduction, 0.0);
}

TEST(Pipeline, ReplayRunsAreByteIdentical) {
    RunConfig cfg;
    apply_config_json(cfg, load_config_file((kSource / "samples/config.json").string()), kSource / "samples");
    cfg.inputs = {(kSource / "samples/hand.vir").string()};
    auto a = scratch("replay-a"), b = scratch("replay-b");
    std::ostringstream o, d;
    cfg.out_dir = a.string();
    ASSERT_EQ(run_pipeline(cfg, o, d), kExitOk) << d.str();
    cfg.out_dir = b.string();
    ASSERT_EQ(run_pipeline(cfg, o, d), kExitOk) << d.str();
    EXPECT_EQ(tree_digest(a), tree_digest(b));
}

TEST(Pipeline, SeveralInputsGetSubdirectories) {
    auto dir = scratch("multi");
    fs::create_directories(dir);
    GeneratorConfig gc;
    gc.blocks = 2;
    gc.stmts_per_block = 12;
    write_file(dir / "gen.vir", print_program(generate(gc).program));
    auto cfg = quiet(dir / "out", {(kSource / "samples/hand.vir").string(), (dir / "gen.vir").string()});
    std::ostringstream o, d;
    ASSERT_EQ(run_pipeline(cfg, o, d), kExitOk) << d.str();
    EXPECT_TRUE(fs::exists(dir / "out/hand/optimized.vir"));
    EXPECT_TRUE(fs::exists(dir / "out/gen/report.json"));
    auto summary = read_file((dir / "out/summary.txt").string());
    EXPECT_NE(summary.find("hand"), std::string::npos);
    EXPECT_NE(summary.find("gen"), std::string::npos);
}

TEST(Config, RejectsSecretsAndUnknownKeys) {
    RunConfig cfg;
    EXPECT_THROW(apply_config_json(cfg, {{"api_key", "sk-123"}}), ConfigError);
    EXPECT_THROW(apply_config_json(cfg, {{"key", "sk-123"}}), ConfigError);
    EXPECT_THROW(apply_config_json(cfg, {{"topk", 3}}), ConfigError);
    EXPECT_THROW(apply_config_json(cfg, {{"weights", {{"bogus", 1}}}}), ConfigError);
    EXPECT_THROW(apply_config_json(cfg, {{"runs", "many"}}), ConfigError);
    EXPECT_THROW(apply_config_json(cfg, nlohmann::json::array()), ConfigError);
}

TEST(Config, AppliesKnownKeys) {
    RunConfig cfg;
    apply_config_json(cfg, {{"weights", {{"store_base", 7}, {"load", 6}}},
                            {"backend", "replay"},
                            {"replay", "x.replay"},
                            {"top", 20},
                            {"seed", 7},
                            {"format", "structured"},
                            {"api_key_env", "OTHER_KEY"}},
                      "/data");
    EXPECT_EQ(cfg.weights.store_base, 7u);
    EXPECT_EQ(cfg.weights.load, 6u);
    EXPECT_EQ(cfg.backend.kind, BackendKind::Replay);
    EXPECT_EQ(cfg.backend.replay_path, "/data/x.replay");
    EXPECT_EQ(cfg.k, 20u);
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.format, ReportFormat::Structured);
    EXPECT_EQ(cfg.backend.api_key_env, "OTHER_KEY");
    EXPECT_EQ(cfg.runs, 100u);
}

TEST(Cli, ExitCodes) {
    const auto hand = (kSource / "samples/hand.vir").string();
    auto dir = scratch("cli");
    fs::create_directories(dir);
    write_file(dir / "bad.vir", "IRSB @ 0x1000 {\n   00 | PUT(offset=8) = t9\n}\n");
    EXPECT_EQ(run("parse \"" + hand + "\""), 0);
    EXPECT_EQ(run("parse \"" + (dir / "bad.vir").string() + "\""), 2);
    EXPECT_EQ(run("parse \"" + (dir / "missing.vir").string() + "\""), 2);
    EXPECT_EQ(run("pipeline --backend gpt \"" + hand + "\""), 3);
    EXPECT_EQ(run("pipeline --backend replay --replay /nonexistent --out \"" + (dir / "o").string() + "\" \"" + hand +
                  "\""),
              3);
    EXPECT_EQ(run("pipeline --backend llm --endpoint http://127.0.0.1:1/v1 --model m --api-key-env "
                  "LIFT_TEST_SURELY_UNSET --out \"" +
                  (dir / "o").string() + "\" \"" + hand + "\""),
              3);
    EXPECT_EQ(run("verify \"" + hand + "\" \"" + hand + "\""), 0);
    EXPECT_EQ(run("--no-such-flag"), 3);
}

TEST(Cli, GenThenPipeline) {
    auto dir = scratch("gen");
    ASSERT_EQ(run("gen --preset counter --seed 3 --out \"" + dir.string() + "\""), 0);
    ASSERT_TRUE(fs::exists(dir / "counter.vir"));
    ASSERT_TRUE(fs::exists(dir / "counter.truth"));
    ASSERT_EQ(run("pipeline --top 1000 --runs 5 --trials 16 --out \"" + (dir / "out").string() + "\" \"" +
                  (dir / "counter.vir").string() + "\""),
              0);
    auto opt = load_program((dir / "out/optimized.vir").string());
    auto orig = load_program((dir / "counter.vir").string());
    EXPECT_EQ(opt.blocks.size(), orig.blocks.size());
    EXPECT_EQ(run("verify \"" + (dir / "counter.vir").string() + "\" \"" + (dir / "out/optimized.vir").string() +
                  "\""),
              0);
}
