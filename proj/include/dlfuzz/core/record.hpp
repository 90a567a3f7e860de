#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlfuzz/core/coverage.hpp"
#include "dlfuzz/core/types.hpp"
#include "dlfuzz/llm/backend.hpp"
#include "dlfuzz/llm/prompts.hpp"
#include "dlfuzz/oracle/oracle.hpp"

namespace dlfuzz {

/// Operator-stat update applied at the start of an iteration (charges the previous
/// iteration's operators). Absent when selection returned early for a repair.
struct StatCharge {
    std::vector<std::string> ops;
    std::uint64_t delta_cov = 0;
    bool exception = false;

    bool operator==(const StatCharge&) const = default;
};

struct IterationRecord {
    std::uint64_t id = 0;
    LoopMode mode = LoopMode::Default;
    std::vector<std::string> selected_ops;
    std::optional<StatCharge> charge;
    /// Summary the generation prompt was built from (FeedbackGuided and Repair).
    std::optional<AnalysisSummary> summary;
    std::vector<ChatExchange> exchanges;
    std::optional<TestCase> test;
    std::optional<BackendResult> eager;
    std::optional<BackendResult> compiled;
    std::optional<Outcome> outcome;
    /// Set when generation, analysis, parsing or execution failed.
    std::optional<std::string> failure;
    /// Every iteration carries exactly one payload; failures carry an exception log.
    FeedbackPayload feedback;
    /// Covered lines merged into cumulative coverage (Pass only).
    CoverageSet covered;
    std::uint64_t delta_cov = 0;
    bool new_bug = false;
    double wall_time_s = 0.0;

    IterationKind kind() const;
    bool operator==(const IterationRecord&) const = default;
};

void to_json(Json& j, const StatCharge& c);
void from_json(const Json& j, StatCharge& c);
void to_json(Json& j, const IterationRecord& r);
void from_json(const Json& j, IterationRecord& r);

} // namespace dlfuzz
