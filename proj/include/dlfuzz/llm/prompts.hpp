#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dlfuzz/core/types.hpp"
#include "dlfuzz/llm/profile.hpp"

namespace dlfuzz {

struct ChatMessage {
    std::string role; // "system", "user" or "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

using Prompt = std::vector<ChatMessage>;

void to_json(Json& j, const ChatMessage& m);
void from_json(const Json& j, ChatMessage& m);

struct AnalysisSummary {
    std::string explanation;
    std::string reasons;
    std::string next_strategy;
    std::string raw;

    bool operator==(const AnalysisSummary&) const = default;
};

void to_json(Json& j, const AnalysisSummary& s);
void from_json(const Json& j, AnalysisSummary& s);

struct PromptOptions {
    /// Character budget for exception-log and bug-report bodies.
    std::size_t feedback_budget = 4000;
};

/// Substitutes every [NAME] placeholder of `tmpl` from `vars`. Substituted values are
/// not rescanned. Throws std::logic_error for a placeholder with no value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Placeholder names used by the shipped templates, including the bracket form.
const std::vector<std::string>& template_placeholders();

/// Keeps the head and tail of `text` so the result fits in `budget` characters.
std::string truncate_middle(std::string_view text, std::size_t budget);

/// Coverage feedback body: counts plus the first `cap` newly covered lines.
std::string render_coverage_body(std::span<const std::string> newly_covered, std::size_t cumulative_size,
                                 std::size_t cap = 200);

/// Wraps source in a fenced code block that parse_code returns unchanged.
std::string fence_code(std::string_view source, std::string_view language = "python");

std::string join_ops(std::span<const std::string> ops);

Prompt build_default_prompt(const SutProfile& profile, std::span<const std::string> selected_ops);

Prompt build_analysis_prompt(const SutProfile& profile, const TestCase& last_test, const FeedbackPayload& feedback,
                             const PromptOptions& options = {});

/// Generation prompt steered by an analysis summary. `goal` is the feedback kind the
/// summary was distilled from: coverage asks for new coverage, a bug report for
/// similar bugs, an exception log for a repair of the previous model.
Prompt build_feedback_prompt(const SutProfile& profile, const TestCase& last_test, const AnalysisSummary& summary,
                             std::span<const std::string> selected_ops, FeedbackKind goal);

} // namespace dlfuzz
