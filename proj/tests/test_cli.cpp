#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <sstream>
#include <sys/wait.h>

#include "toy_campaign.hpp"

namespace dlfuzz {
namespace {

using testing::TempDir;
using testing::source_path;

// ---- configuration ------------------------------------------------------------------

TEST(Config, JsonRoundTrip) {
    TempDir tmp;
    auto c = testing::toy_config(tmp / "w", 20);
    c.tolerance = ToleranceConfig{1e-4, 2e-4, true};
    c.generation_llm = LlmSettings{"http://localhost:8000/v1", "gen", 0.8, 512, "K", 30.0};
    c.repair_window = 2;
    c.sa.t_min = 1.0;
    EXPECT_EQ(Json::parse(Json(c).dump()).get<CampaignConfig>(), c);
    c.iterations.reset();
    c.hours = 1.5;
    c.mock_transcript.reset();
    EXPECT_EQ(Json::parse(Json(c).dump()).get<CampaignConfig>(), c);
}

TEST(Config, DefaultsAndUnknownKeys) {
    auto c = Json::parse(R"({"profile":"p","opset":"o","iterations":3})").get<CampaignConfig>();
    EXPECT_EQ(c.analysis_llm.temperature, 0.0);
    EXPECT_EQ(c.generation_llm.temperature, 1.0);
    EXPECT_EQ(c.tolerance, (ToleranceConfig{1e-3, 1e-3, true}));
    EXPECT_EQ(c.sa, SAParams{});
    EXPECT_EQ(c.shim_cmd, kScriptedShim);
    auto partial = Json::parse(R"({"analysis_llm":{"model":"m"}})").get<CampaignConfig>();
    EXPECT_EQ(partial.analysis_llm.temperature, 0.0);
    EXPECT_THROW(Json::parse(R"({"iteratons":3})").get<CampaignConfig>(), ConfigError);
    EXPECT_THROW(Json::parse(R"({"seed":"x"})").get<CampaignConfig>(), ConfigError);
    EXPECT_THROW(Json::parse("[]").get<CampaignConfig>(), ConfigError);
}

TEST(Config, LoadResolvesRelativePaths) {
    TempDir tmp;
    std::filesystem::create_directories(tmp / "cfg");
    testing::spit(tmp / "cfg/c.json", R"({"profile":"../p.json","opset":"ops","workdir":"run","iterations":1})");
    auto c = load_config(tmp / "cfg/c.json");
    EXPECT_EQ(c.profile, (tmp / "p.json").lexically_normal());
    EXPECT_EQ(c.opset, tmp / "cfg/ops");
    EXPECT_EQ(c.workdir, tmp / "cfg/run");
    testing::spit(tmp / "bad.json", "{");
    EXPECT_THROW(load_config(tmp / "bad.json"), ConfigError);
    EXPECT_THROW(load_config(tmp / "missing.json"), ConfigError);
}

TEST(Config, Validation) {
    TempDir tmp;
    const auto good = testing::toy_config(tmp / "w", 5);
    EXPECT_NO_THROW(validate(good));
    auto expect_invalid = [&](auto mutate) {
        auto c = good;
        mutate(c);
        EXPECT_THROW(validate(c), ConfigError);
    };
    expect_invalid([](CampaignConfig& c) { c.iterations.reset(); });
    expect_invalid([](CampaignConfig& c) { c.hours = 1.0; });
    expect_invalid([](CampaignConfig& c) {
        c.iterations.reset();
        c.hours = -1.0;
    });
    expect_invalid([](CampaignConfig& c) { c.opset = "/nonexistent.ops"; });
    expect_invalid([](CampaignConfig& c) { c.profile.clear(); });
    expect_invalid([](CampaignConfig& c) { c.mock_transcript.reset(); });
    expect_invalid([](CampaignConfig& c) { c.workdir.clear(); });
    expect_invalid([](CampaignConfig& c) { c.shim_cmd.clear(); });
    expect_invalid([](CampaignConfig& c) { c.sa.gamma = 1.0; });
    expect_invalid([](CampaignConfig& c) { c.tolerance.atol = -1.0; });
    expect_invalid([](CampaignConfig& c) { c.exec_timeout_s = 0.0; });
    expect_invalid([](CampaignConfig& c) { c.snapshot_interval = 0; });
    expect_invalid([](CampaignConfig& c) { c.feedback_budget = 10; });

    auto remote = good;
    remote.mock_transcript.reset();
    remote.analysis_llm = LlmSettings{"http://h/v1", "a"};
    remote.generation_llm = LlmSettings{"http://h/v1", "g"};
    EXPECT_NO_THROW(validate(remote));
}

TEST(Config, SnapshotKeepsEverythingNeededToResume) {
    TempDir tmp;
    auto c = testing::toy_config(tmp / "w", 5);
    auto profile = load_profile(c.profile);
    auto ops = load_operator_set(c.opset);
    auto snap = Json::parse(make_config_snapshot(c, profile, ops).dump());
    EXPECT_EQ(snap["config"].get<CampaignConfig>(), c);
    EXPECT_EQ(snap["profile"].get<SutProfile>(), profile);
    EXPECT_EQ(snap["operators"].get<std::vector<OperatorRecord>>(), ops);
}

TEST(Config, LoopSettingsMirrorConfig) {
    TempDir tmp;
    auto c = testing::toy_config(tmp / "w", 5);
    c.analysis_llm.max_tokens = 77;
    c.repair_window = 3;
    auto s = loop_settings(c, "/opt/my tools/dlfuzz");
    EXPECT_EQ(s.analysis_temperature, 0.0);
    EXPECT_EQ(s.analysis_max_tokens, 77);
    EXPECT_EQ(s.repair_window, 3u);
    EXPECT_EQ(s.iteration_budget, 5u);
    EXPECT_EQ(s.repro_prefix, "'/opt/my tools/dlfuzz' replay");
    EXPECT_EQ(loop_settings(c, "/usr/bin/dlfuzz").repro_prefix, "/usr/bin/dlfuzz replay");
}

// ---- in-process command line --------------------------------------------------------

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliContext ctx;
    ctx.clock = testing::ticking_clock();
    const int code = run_cli(args, out, err, ctx);
    return {code, out.str(), err.str()};
}

std::vector<std::string> run_args(const std::filesystem::path& workdir, std::uint64_t iterations) {
    return {"run",
            "--profile",
            source_path("profiles/toy/profile.json").string(),
            "--opset",
            source_path("opsets/toy.ops").string(),
            "--mock-transcript",
            source_path("tests/fixtures/toy_transcript.jsonl").string(),
            "--seed",
            "7",
            "--iterations",
            std::to_string(iterations),
            "--workdir",
            workdir.string()};
}

Json summary_json(const std::string& out) {
    const auto pos = out.find("summary: ");
    if (pos == std::string::npos) return Json{};
    return Json::parse(out.substr(pos + 9, out.find('\n', pos) - pos - 9));
}

TEST(Cli, RunPrintsTableAndSummary) {
    TempDir tmp;
    auto r = cli(run_args(tmp / "w", 20));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("# Bugs"), std::string::npos);
    EXPECT_NE(r.out.find("# Valid Tests (%)"), std::string::npos);
    auto s = summary_json(r.out);
    EXPECT_EQ(s["iterations"], 20);
    EXPECT_EQ(s["unique_bugs"], 2);
    EXPECT_EQ(summary_json(cli({"summary", "--workdir", (tmp / "w").string()}).out), s);
}

TEST(Cli, ConfigFileWithFlagOverrides) {
    TempDir tmp;
    Json cfg = testing::toy_config(tmp / "from-file", 3);
    testing::spit(tmp / "c.json", cfg.dump());
    auto r = cli({"run", "--config", (tmp / "c.json").string(), "--iterations", "5", "--workdir",
                  (tmp / "w").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(summary_json(r.out)["iterations"], 5);
    EXPECT_FALSE(std::filesystem::exists(tmp / "from-file"));
}

TEST(Cli, ZeroBudgetGivesEmptySummary) {
    TempDir tmp;
    auto r = cli(run_args(tmp / "w", 0));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto s = summary_json(r.out);
    EXPECT_EQ(s["iterations"], 0);
    EXPECT_EQ(s["validity_rate"], 0.0);
    EXPECT_EQ(s["coverage"], 0);
}

TEST(Cli, ConfigErrors) {
    TempDir tmp;
    auto args = run_args(tmp / "w", 5);
    args[4] = "/nonexistent/ops";
    auto r = cli(args);
    EXPECT_EQ(r.code, kExitConfig);
    EXPECT_NE(r.err.find("operator set"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(tmp / "w"));

    std::filesystem::create_directories(tmp / "occupied");
    testing::spit(tmp / "occupied/file", "");
    EXPECT_EQ(cli(run_args(tmp / "occupied", 5)).code, kExitConfig);
    EXPECT_EQ(cli({"run", "--iterations", "3"}).code, kExitConfig);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, ResumeContinuesToTheBudget) {
    TempDir tmp;
    ASSERT_EQ(cli(run_args(tmp / "ref", 20)).code, kExitOk);
    // Simulate a crash after iteration 10: the log stops there while the last
    // snapshot is from a later point and must be ignored.
    ASSERT_EQ(cli(run_args(tmp / "w", 20)).code, kExitOk);
    auto store = CampaignStore::open(tmp / "w");
    for (std::uint64_t id = 10; id < 20; ++id) std::filesystem::remove(store.record_path(id));
    EXPECT_EQ(store.load().iteration, 10u);

    auto r = cli({"resume", "--workdir", (tmp / "w").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(summary_json(r.out)["iterations"], 20);
    EXPECT_TRUE(testing::oplog_contents(tmp / "w") == testing::oplog_contents(tmp / "ref"));

    auto again = cli({"resume", "--workdir", (tmp / "w").string()});
    EXPECT_EQ(again.code, kExitOk);
    EXPECT_EQ(summary_json(again.out)["iterations"], 20);
    EXPECT_EQ(CampaignStore::open(tmp / "w").read_log().size(), 20u);
}

TEST(Cli, ResumeErrors) {
    TempDir tmp;
    std::filesystem::create_directories(tmp / "empty");
    EXPECT_EQ(cli({"resume", "--workdir", (tmp / "empty").string()}).code, kExitStorage);
    ASSERT_EQ(cli(run_args(tmp / "w", 6)).code, kExitOk);
    testing::spit(tmp / "w/oplog/00000002.json", "garbage");
    EXPECT_EQ(cli({"resume", "--workdir", (tmp / "w").string()}).code, kExitCorruptLog);
    EXPECT_EQ(cli({"summary", "--workdir", (tmp / "w").string()}).code, kExitCorruptLog);
}

TEST(Cli, ReplayReclassifies) {
    TempDir tmp;
    ASSERT_EQ(cli(run_args(tmp / "w", 8)).code, kExitOk);
    const auto dir = (tmp / "w").string();
    auto r = cli({"replay", "--workdir", dir, "--id", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("recorded: bug_numerical\nreplayed: bug_numerical"), std::string::npos);
    EXPECT_NE(r.out.find("signature: "), std::string::npos);
    auto loose = cli({"replay", "--workdir", dir, "--id", "3", "--atol", "1", "--rtol", "0"});
    EXPECT_NE(loose.out.find("replayed: pass"), std::string::npos);
    EXPECT_EQ(cli({"replay", "--workdir", dir, "--id", "99"}).code, kExitMissingRecord);
    EXPECT_EQ(cli({"replay", "--workdir", dir}).code, kExitUsage);
}

TEST(Cli, ShimProfileMismatchIsAShimFailure) {
    TempDir tmp;
    auto args = run_args(tmp / "w", 3);
    args.insert(args.end(), {"--shim-cmd", testing::shim_binary() + " --profile pytorch"});
    auto r = cli(args);
    EXPECT_EQ(r.code, kExitShim);
    EXPECT_FALSE(std::filesystem::exists(tmp / "w"));
}

TEST(Cli, ChildShimMatchesInProcessExecutor) {
    TempDir tmp;
    auto args = run_args(tmp / "child", 30);
    args.insert(args.end(), {"--shim-cmd", testing::shim_binary() + " --profile toy"});
    ASSERT_EQ(cli(args).code, kExitOk);
    ASSERT_EQ(cli(run_args(tmp / "local", 30)).code, kExitOk);
    EXPECT_TRUE(testing::oplog_contents(tmp / "child") == testing::oplog_contents(tmp / "local"));
}

// ---- the installed binary -----------------------------------------------------------

CliRun shell(const std::string& command) {
    std::string out;
    FILE* p = ::popen((command + " 2>&1").c_str(), "r");
    if (!p) return {-1, "", "popen failed"};
    std::array<char, 4096> buf;
    while (auto n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = ::pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, ""};
}

TEST(CliBinary, ReproCommandsInBugReportsWork) {
    TempDir tmp;
    std::string cmd = testing::cli_binary();
    for (const auto& a : run_args(tmp / "w", 8)) cmd += " '" + a + "'";
    auto r = shell(cmd);
    ASSERT_EQ(r.code, 0) << r.out;
    int reports = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp / "w/bugs")) {
        auto j = Json::parse(testing::slurp(e.path()));
        const std::string repro = j["reproduce"];
        EXPECT_EQ(repro.rfind(testing::cli_binary(), 0), 0u) << repro;
        auto rr = shell(repro);
        EXPECT_EQ(rr.code, 0) << rr.out;
        EXPECT_NE(rr.out.find("replayed: " + j["classification"].get<std::string>()), std::string::npos) << rr.out;
        ++reports;
    }
    EXPECT_EQ(reports, 2);
}

TEST(CliBinary, ExitCodes) {
    TempDir tmp;
    EXPECT_EQ(shell(testing::cli_binary() + " summary --workdir " + (tmp / "nothing").string()).code, kExitStorage);
    EXPECT_EQ(shell(testing::cli_binary() + " bogus").code, kExitUsage);
}

} // namespace
} // namespace dlfuzz
