#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "dlfuzz/bridge/executor.hpp"
#include "dlfuzz/core/campaign_store.hpp"
#include "dlfuzz/llm/backend.hpp"
#include "dlfuzz/llm/profile.hpp"
#include "dlfuzz/llm/prompts.hpp"
#include "dlfuzz/opsel/opsel.hpp"
#include "dlfuzz/oracle/oracle.hpp"

namespace dlfuzz {

/// Prompt mode for iteration `iteration` given how the previous one ended.
///   first iteration                       -> Default
///   previous failed to generate/analyze   -> Default
///   previous Invalid, repair budget left  -> Repair
///   previous Invalid, repair budget spent -> Default
///   otherwise                             -> FeedbackGuided
/// `repair_streak` counts consecutive Repair iterations ending with the previous one;
/// at most `repair_window` repairs are attempted per invalid test.
LoopMode next_mode(LoopMode prev_mode, IterationKind prev_kind, std::uint64_t iteration,
                   std::uint32_t repair_streak, std::uint32_t repair_window = 1);

inline LoopMode next_mode(LoopMode prev_mode, IterationKind prev_kind, std::uint64_t iteration) {
    return next_mode(prev_mode, prev_kind, iteration, prev_mode == LoopMode::Repair ? 1 : 0, 1);
}

/// Selection generator for one iteration, derived from the campaign seed.
Rng iteration_rng(std::uint64_t campaign_seed, std::uint64_t iteration);
/// Seed handed to the executor for SUT-side randomness.
std::uint64_t execution_seed(std::uint64_t campaign_seed, std::uint64_t iteration);

struct LoopSettings {
    SAParams sa;
    ToleranceConfig tolerance;
    PromptOptions prompts;
    double analysis_temperature = 0.0;
    int analysis_max_tokens = 1024;
    double generation_temperature = 1.0;
    int generation_max_tokens = 2048;
    double exec_timeout_s = 10.0;
    std::uint32_t repair_window = 1;
    std::size_t coverage_list_cap = 200;
    std::optional<std::uint64_t> iteration_budget;
    std::optional<double> hours_budget;
    /// Prefix of the reproduction command embedded in bug reports; " --id N" is appended.
    std::string repro_prefix = "dlfuzz replay";
};

struct LoopDeps {
    const SutProfile& profile;
    ChatBackend& analysis;
    ChatBackend& generation;
    Executor& executor;
    CampaignStore& store;
    /// Monotonic seconds, used for per-iteration wall time.
    std::function<double()> clock;
};

struct CampaignSummary {
    std::uint64_t iterations = 0;
    std::uint64_t executed = 0;
    std::uint64_t valid = 0;
    double validity_rate = 0.0;
    std::uint64_t unique_bugs = 0;
    std::uint64_t unique_numerical = 0;
    std::uint64_t unique_behavioral = 0;
    std::uint64_t bug_outcomes = 0;
    std::uint64_t invalid = 0;
    std::uint64_t failures = 0;
    std::uint64_t coverage = 0;
    std::uint64_t repairs_attempted = 0;
    std::uint64_t repairs_succeeded = 0;

    bool operator==(const CampaignSummary&) const = default;
};

CampaignSummary summarize(const CampaignState& state);
Json to_json(const CampaignSummary& s);
/// Human-readable table: # Bugs, Coverage, # Valid Tests (%), # Tests.
std::string format_table(const CampaignSummary& s);

class Campaign {
  public:
    Campaign(LoopSettings settings, LoopDeps deps, CampaignState state);

    /// Runs one iteration end to end and persists its record. Agent, parse and
    /// execution failures become failure records; ShimError and StorageError escape.
    IterationRecord run_iteration();

    /// Runs until the iteration or wall-clock budget is reached, then writes a snapshot.
    CampaignSummary run();

    bool budget_reached() const;
    const CampaignState& state() const { return state_; }

  private:
    std::string ask(ChatBackend& backend, AgentRole role, LoopMode mode, Prompt prompt, IterationRecord& record);

    LoopSettings settings_;
    LoopDeps deps_;
    CampaignState state_;
    std::vector<std::string> op_names_;
};

struct ReplayResult {
    Classification recorded;
    Classification replayed;
    Outcome outcome;
};

/// Re-executes a recorded test and classifies it again with `tolerance`.
ReplayResult replay_record(const IterationRecord& record, Executor& executor, const ToleranceConfig& tolerance,
                           std::uint64_t campaign_seed, double exec_timeout_s);

} // namespace dlfuzz
