#include "dlfuzz/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>

#include "dlfuzz/bridge/shim_process.hpp"
#include "dlfuzz/core/campaign_store.hpp"

namespace dlfuzz {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
    if (!s.empty() && s.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789/._-+=:,@") ==
                          std::string::npos)
        return s;
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

struct RunFlags {
    std::string config;
    std::uint64_t iterations = 0;
    double hours = 0.0;
    std::uint64_t seed = 0;
    double atol = 0.0;
    double rtol = 0.0;
    std::string profile, opset, workdir;
    std::string analysis_endpoint, analysis_model, generation_endpoint, generation_model;
    std::string mock_transcript, shim_cmd;
};

struct RunOptions {
    CLI::Option* config = nullptr;
    CLI::Option* iterations = nullptr;
    CLI::Option* hours = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* atol = nullptr;
    CLI::Option* rtol = nullptr;
    CLI::Option* profile = nullptr;
    CLI::Option* opset = nullptr;
    CLI::Option* workdir = nullptr;
    CLI::Option* analysis_endpoint = nullptr;
    CLI::Option* analysis_model = nullptr;
    CLI::Option* generation_endpoint = nullptr;
    CLI::Option* generation_model = nullptr;
    CLI::Option* mock_transcript = nullptr;
    CLI::Option* shim_cmd = nullptr;
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

CampaignConfig config_from_flags(const RunFlags& f, const RunOptions& o) {
    CampaignConfig c;
    if (given(o.config)) c = load_config(f.config);
    const fs::path cwd = fs::current_path();
    auto path_flag = [&](const CLI::Option* opt, const std::string& value, fs::path& target) {
        if (given(opt)) target = (cwd / value).lexically_normal();
    };
    if (given(o.iterations)) {
        c.iterations = f.iterations;
        c.hours.reset();
    }
    if (given(o.hours)) {
        c.hours = f.hours;
        c.iterations.reset();
    }
    if (given(o.seed)) c.seed = f.seed;
    if (given(o.atol)) c.tolerance.atol = f.atol;
    if (given(o.rtol)) c.tolerance.rtol = f.rtol;
    path_flag(o.profile, f.profile, c.profile);
    path_flag(o.opset, f.opset, c.opset);
    path_flag(o.workdir, f.workdir, c.workdir);
    if (given(o.mock_transcript)) c.mock_transcript = (cwd / f.mock_transcript).lexically_normal();
    if (given(o.analysis_endpoint)) c.analysis_llm.endpoint = f.analysis_endpoint;
    if (given(o.analysis_model)) c.analysis_llm.model = f.analysis_model;
    if (given(o.generation_endpoint)) c.generation_llm.endpoint = f.generation_endpoint;
    if (given(o.generation_model)) c.generation_llm.model = f.generation_model;
    if (given(o.shim_cmd)) c.shim_cmd = f.shim_cmd;
    resolve_paths(c, cwd);
    return c;
}

void add_run_flags(CLI::App& cmd, RunFlags& f, RunOptions& o) {
    o.config = cmd.add_option("--config", f.config, "campaign config (JSON)");
    o.iterations = cmd.add_option("--iterations", f.iterations, "iteration budget");
    o.hours = cmd.add_option("--hours", f.hours, "wall-clock budget in hours");
    o.seed = cmd.add_option("--seed", f.seed, "campaign seed");
    o.atol = cmd.add_option("--atol", f.atol, "absolute tolerance");
    o.rtol = cmd.add_option("--rtol", f.rtol, "relative tolerance");
    o.profile = cmd.add_option("--profile", f.profile, "SUT profile (profile.json)");
    o.opset = cmd.add_option("--opset", f.opset, "operator set (JSON Lines)");
    o.workdir = cmd.add_option("--workdir", f.workdir, "campaign directory");
    o.analysis_endpoint = cmd.add_option("--llm-analysis-endpoint", f.analysis_endpoint);
    o.analysis_model = cmd.add_option("--llm-analysis-model", f.analysis_model);
    o.generation_endpoint = cmd.add_option("--llm-generation-endpoint", f.generation_endpoint);
    o.generation_model = cmd.add_option("--llm-generation-model", f.generation_model);
    o.mock_transcript = cmd.add_option("--mock-transcript", f.mock_transcript, "replay agent replies from a transcript");
    o.shim_cmd = cmd.add_option("--shim-cmd", f.shim_cmd, "shim command line, or 'scripted'");
}

void print_summary(std::ostream& out, const CampaignSummary& s) {
    out << format_table(s);
    out << "summary: " << to_json(s).dump() << "\n";
}

/// Everything a running campaign borrows.
struct Session {
    CampaignConfig config;
    SutProfile profile;
    ChatBackends chat;
    std::unique_ptr<Executor> executor;
};

CampaignSummary drive(Session& s, CampaignStore& store, CampaignState state, const CliContext& ctx) {
    LoopDeps deps{s.profile, *s.chat.analysis, *s.chat.generation, *s.executor, store, ctx.clock};
    Campaign campaign(loop_settings(s.config, ctx.self_command), deps, std::move(state));
    return campaign.run();
}

int cmd_run(const CampaignConfig& config, std::ostream& out, const CliContext& ctx) {
    Session s;
    s.config = config;
    std::vector<OperatorRecord> operators;
    try {
        validate(s.config);
        s.profile = load_profile(s.config.profile);
        s.profile.validate();
        operators = load_operator_set(s.config.opset);
        s.chat = make_chat_backends(s.config);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (fs::exists(s.config.workdir) &&
        (!fs::is_directory(s.config.workdir) || !fs::is_empty(s.config.workdir)))
        throw ConfigError("workdir " + s.config.workdir.string() + " is not empty; use resume");
    s.executor = make_executor(s.config, s.profile.name);
    auto store = CampaignStore::create(s.config.workdir, make_config_snapshot(s.config, s.profile, operators),
                                       s.config.snapshot_interval);
    print_summary(out, drive(s, store, store.fresh_state(), ctx));
    return kExitOk;
}

Session session_from_snapshot(const CampaignStore& store) {
    Session s;
    try {
        s.config = store.config_snapshot().at("config").get<CampaignConfig>();
        s.profile = store.config_snapshot().at("profile").get<SutProfile>();
    } catch (const ConfigError& e) {
        throw CorruptLogError(std::string("config.snapshot: ") + e.what());
    } catch (const Json::exception& e) {
        throw CorruptLogError(std::string("config.snapshot: ") + e.what());
    }
    s.config.workdir = store.dir();
    return s;
}

int cmd_resume(const fs::path& workdir, std::ostream& out, const CliContext& ctx) {
    auto store = CampaignStore::open(workdir);
    Session s = session_from_snapshot(store);
    auto state = store.load();
    try {
        s.chat = make_chat_backends(s.config);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    s.executor = make_executor(s.config, s.profile.name);
    print_summary(out, drive(s, store, std::move(state), ctx));
    return kExitOk;
}

int cmd_replay(const fs::path& workdir, std::uint64_t id, std::optional<double> atol, std::optional<double> rtol,
               std::ostream& out, std::ostream& err) {
    auto store = CampaignStore::open(workdir);
    Session s = session_from_snapshot(store);
    auto record = store.read_record(id);
    if (!record) {
        err << "error: no record " << id << " in " << workdir.string() << "\n";
        return kExitMissingRecord;
    }
    if (!record->test || !record->outcome) {
        err << "error: record " << id << " did not execute a test (" << record->failure.value_or("no outcome")
            << ")\n";
        return kExitMissingRecord;
    }
    auto tol = s.config.tolerance;
    if (atol) tol.atol = *atol;
    if (rtol) tol.rtol = *rtol;
    auto executor = make_executor(s.config, s.profile.name);
    auto result = replay_record(*record, *executor, tol, s.config.seed, s.config.exec_timeout_s);
    out << "recorded: " << to_string(result.recorded) << "\n";
    out << "replayed: " << to_string(result.replayed) << "\n";
    if (!result.outcome.reason.empty()) out << "reason: " << result.outcome.reason << "\n";
    if (result.outcome.signature) out << "signature: " << *result.outcome.signature << "\n";
    return kExitOk;
}

int cmd_summary(const fs::path& workdir, std::ostream& out) {
    auto store = CampaignStore::open(workdir);
    print_summary(out, summarize(store.load()));
    return kExitOk;
}

} // namespace

LoopSettings loop_settings(const CampaignConfig& c, const std::string& self_command) {
    LoopSettings s;
    s.sa = c.sa;
    s.tolerance = c.tolerance;
    s.prompts.feedback_budget = c.feedback_budget;
    s.analysis_temperature = c.analysis_llm.temperature;
    s.analysis_max_tokens = c.analysis_llm.max_tokens;
    s.generation_temperature = c.generation_llm.temperature;
    s.generation_max_tokens = c.generation_llm.max_tokens;
    s.exec_timeout_s = c.exec_timeout_s;
    s.repair_window = c.repair_window;
    s.coverage_list_cap = c.coverage_list_cap;
    s.iteration_budget = c.iterations;
    s.hours_budget = c.hours;
    s.repro_prefix = shell_quote(self_command) + " replay";
    return s;
}

std::unique_ptr<Executor> make_executor(const CampaignConfig& c, const std::string& profile_name) {
    if (c.shim_cmd == kScriptedShim) return std::make_unique<ScriptedExecutor>();
    ShimOptions opts;
    opts.command = c.shim_cmd;
    opts.profile = profile_name;
    opts.handshake_timeout_s = c.handshake_timeout_s;
    opts.grace_s = c.grace_s;
    auto shim = std::make_unique<ShimExecutor>(std::move(opts));
    shim->ensure_started();
    return shim;
}

ChatBackends make_chat_backends(const CampaignConfig& c) {
    ChatBackends b;
    if (c.mock_transcript) {
        b.analysis = std::make_unique<MockChatBackend>(MockChatBackend::from_file(*c.mock_transcript, "mock"));
        b.generation = std::make_unique<MockChatBackend>(MockChatBackend::from_file(*c.mock_transcript, "mock"));
    } else {
        b.analysis = std::make_unique<RemoteChatBackend>(c.analysis_llm);
        b.generation = std::make_unique<RemoteChatBackend>(c.generation_llm);
    }
    return b;
}

Json make_config_snapshot(const CampaignConfig& config, const SutProfile& profile,
                          const std::vector<OperatorRecord>& operators) {
    return Json{{"config", config}, {"profile", profile}, {"operators", operators}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliContext& ctx) {
    CLI::App app{"Feedback-driven differential fuzzer for deep-learning compilers", "dlfuzz"};
    app.require_subcommand(1);

    RunFlags run_flags;
    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "start a new campaign");
    add_run_flags(*run, run_flags, run_opts);

    std::string workdir;
    auto* resume = app.add_subcommand("resume", "continue a campaign to its budget");
    resume->add_option("--workdir", workdir, "campaign directory")->required();

    std::uint64_t replay_id = 0;
    double replay_atol = 0.0, replay_rtol = 0.0;
    auto* replay = app.add_subcommand("replay", "re-execute and re-classify a recorded test");
    replay->add_option("--workdir", workdir, "campaign directory")->required();
    replay->add_option("--id", replay_id, "iteration id")->required();
    auto* replay_atol_opt = replay->add_option("--atol", replay_atol, "absolute tolerance override");
    auto* replay_rtol_opt = replay->add_option("--rtol", replay_rtol, "relative tolerance override");

    auto* summary = app.add_subcommand("summary", "print the summary of a campaign directory");
    summary->add_option("--workdir", workdir, "campaign directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(config_from_flags(run_flags, run_opts), out, ctx);
        const fs::path dir = fs::absolute(workdir).lexically_normal();
        if (resume->parsed()) return cmd_resume(dir, out, ctx);
        if (replay->parsed()) {
            std::optional<double> atol, rtol;
            if (given(replay_atol_opt)) atol = replay_atol;
            if (given(replay_rtol_opt)) rtol = replay_rtol;
            return cmd_replay(dir, replay_id, atol, rtol, out, err);
        }
        if (summary->parsed()) return cmd_summary(dir, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ShimError& e) {
        err << "shim failure: " << e.what() << "\n";
        return kExitShim;
    } catch (const ExecutionError& e) {
        err << "execution failure: " << e.what() << "\n";
        return kExitShim;
    } catch (const CorruptLogError& e) {
        err << "corrupt campaign log: " << e.what() << "\n";
        return kExitCorruptLog;
    } catch (const StorageError& e) {
        err << "storage failure: " << e.what() << "\n";
        return kExitStorage;
    }
    return kExitUsage;
}

} // namespace dlfuzz
