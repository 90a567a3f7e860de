#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "dlfuzz/bridge/executor.hpp"
#include "dlfuzz/config/config.hpp"
#include "dlfuzz/llm/profile.hpp"
#include "dlfuzz/loop/loop.hpp"

namespace dlfuzz {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitShim = 3,
    kExitStorage = 4,
    kExitCorruptLog = 5,
    kExitMissingRecord = 6,
};

struct CliContext {
    /// Command used in reproduction lines of bug reports.
    std::string self_command = "dlfuzz";
    /// Clock for per-iteration wall time; the steady clock when empty.
    std::function<double()> clock;
};

LoopSettings loop_settings(const CampaignConfig& config, const std::string& self_command);
std::unique_ptr<Executor> make_executor(const CampaignConfig& config, const std::string& profile_name);

struct ChatBackends {
    std::unique_ptr<ChatBackend> analysis;
    std::unique_ptr<ChatBackend> generation;
};
ChatBackends make_chat_backends(const CampaignConfig& config);

/// Contents of config.snapshot: the resolved config plus the operator set and profile
/// it referenced, so that a campaign can resume without the original files.
Json make_config_snapshot(const CampaignConfig& config, const SutProfile& profile,
                          const std::vector<OperatorRecord>& operators);

/// Entry point of the `dlfuzz` tool; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliContext& context = {});

} // namespace dlfuzz
