#include "dlfuzz/llm/prompts.hpp"

#include <sstream>

namespace dlfuzz {

void to_json(Json& j, const ChatMessage& m) { j = Json{{"role", m.role}, {"content", m.content}}; }

void from_json(const Json& j, ChatMessage& m) {
    m.role = j.at("role").get<std::string>();
    m.content = j.at("content").get<std::string>();
}

void to_json(Json& j, const AnalysisSummary& s) {
    j = Json{{"explanation", s.explanation}, {"reasons", s.reasons}, {"next_strategy", s.next_strategy}, {"raw", s.raw}};
}

void from_json(const Json& j, AnalysisSummary& s) {
    s.explanation = j.at("explanation").get<std::string>();
    s.reasons = j.at("reasons").get<std::string>();
    s.next_strategy = j.at("next_strategy").get<std::string>();
    s.raw = j.at("raw").get<std::string>();
}

namespace {

constexpr std::string_view kGenerationSystem =
    "You write small [LIBRARY] models that test the [LIBRARY] compiler against its eager mode. "
    "Every answer is one fenced code block holding a model definition and the code that builds "
    "its input tensors. Use only the public [LIBRARY] API.";

constexpr std::string_view kDefaultInstruction =
    "Selected operators: [SELECTED_OPS]\n"
    "Please generate a valid [LIBRARY] model with selected operators.";

constexpr std::string_view kAnalysisSystem =
    "You analyze the results of running [LIBRARY] models on two backends: [EAGER_BACKEND] "
    "(no compilation) and [COMPILED_BACKEND] (compilation). You distill the feedback into a "
    "short summary that guides the next generated test.";

constexpr std::string_view kAnalysisHead =
    "Shown here is a [LIBRARY] model along with input tensors from the last iteration.\n"
    "[MODEL CODE]\n";

constexpr std::string_view kCoverageBranch =
    "It ran on both backends without violating either test oracle. Coverage feedback:\n"
    "[COVERAGE]\n"
    "Analyze which parts of the model exercised new code in [LIBRARY] and which did not.\n";

constexpr std::string_view kBugBranch =
    "Running it on both backends violated a test oracle. Bug report:\n"
    "[BUG]\n"
    "Analyze which part of the model triggers this inconsistency and why.\n";

constexpr std::string_view kExceptionBranch =
    "It crashed on both backends, so it is an invalid model. Exception log:\n"
    "[EXCEPTION]\n"
    "Analyze why the model fails to run.\n";

constexpr std::string_view kAnalysisTail =
    "Answer in exactly three sections:\n"
    "Explanation: what happened during execution.\n"
    "Reasons: why it happened.\n"
    "Next testing strategy: [STRATEGY_HINT]";

constexpr std::string_view kFeedbackBody =
    "Goal: [GOAL].\n"
    "Below is the [LIBRARY] model generated in the last iteration.\n"
    "[MODEL CODE]\n"
    "Analysis summary of its execution:\n"
    "[ANALYSIS SUMMARY]\n"
    "Selected operators: [SELECTED_OPS]\n"
    "[INSTRUCTION]";

std::string_view strategy_hint(FeedbackKind kind) {
    switch (kind) {
    case FeedbackKind::Coverage: return "how the next model should explore new coverage.";
    case FeedbackKind::BugReport: return "how the next model can trigger similar bugs.";
    case FeedbackKind::ExceptionLog: return "how to repair the model so that it runs.";
    }
    return "";
}

std::string_view goal_text(FeedbackKind kind) {
    switch (kind) {
    case FeedbackKind::Coverage: return "explore new coverage";
    case FeedbackKind::BugReport: return "trigger similar bugs";
    case FeedbackKind::ExceptionLog: return "repair the invalid model";
    }
    return "";
}

std::string_view feedback_instruction(FeedbackKind kind) {
    switch (kind) {
    case FeedbackKind::Coverage:
        return "Following the next testing strategy, generate a new valid [LIBRARY] model with the selected "
               "operators that reaches code the last model did not.";
    case FeedbackKind::BugReport:
        return "Following the next testing strategy, generate a new valid [LIBRARY] model with the selected "
               "operators that is likely to trigger similar bugs, for example through operator overloading, "
               "parameter mutation or inverse operators.";
    case FeedbackKind::ExceptionLog:
        return "Following the next testing strategy, repair the last model so that it runs on both backends. "
               "Keep the selected operators and return the complete fixed model.";
    }
    return "";
}

bool placeholder_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_' || c == ' '; }

std::string render_summary(const AnalysisSummary& s) {
    std::string out;
    if (!s.explanation.empty()) out += "Explanation: " + s.explanation + "\n";
    if (!s.reasons.empty()) out += "Reasons: " + s.reasons + "\n";
    out += "Next testing strategy: " + s.next_strategy;
    return out;
}

std::map<std::string, std::string> base_vars(const SutProfile& profile) {
    return {{"LIBRARY", profile.library_token},
            {"EAGER_BACKEND", profile.eager_label},
            {"COMPILED_BACKEND", profile.compiled_label}};
}

} // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '[' && i + 1 < tmpl.size() && tmpl[i + 1] >= 'A' && tmpl[i + 1] <= 'Z') {
            std::size_t j = i + 1;
            while (j < tmpl.size() && placeholder_char(tmpl[j])) ++j;
            if (j < tmpl.size() && tmpl[j] == ']') {
                std::string name(tmpl.substr(i + 1, j - i - 1));
                auto it = vars.find(name);
                if (it == vars.end()) throw std::logic_error("unbound template placeholder [" + name + "]");
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += tmpl[i++];
    }
    return out;
}

const std::vector<std::string>& template_placeholders() {
    static const std::vector<std::string> names = {
        "[LIBRARY]",  "[SELECTED_OPS]",     "[MODEL CODE]",    "[COVERAGE]",      "[BUG]",
        "[EXCEPTION]", "[ANALYSIS SUMMARY]", "[EAGER_BACKEND]", "[COMPILED_BACKEND]", "[STRATEGY_HINT]",
        "[GOAL]",     "[INSTRUCTION]"};
    return names;
}

std::string truncate_middle(std::string_view text, std::size_t budget) {
    if (text.size() <= budget) return std::string(text);
    std::string marker = "\n<... " + std::to_string(text.size()) + " characters, middle truncated ...>\n";
    if (marker.size() >= budget) return std::string(text.substr(0, budget));
    const std::size_t keep = budget - marker.size();
    const std::size_t head = keep / 2;
    const std::size_t tail = keep - head;
    return std::string(text.substr(0, head)) + marker + std::string(text.substr(text.size() - tail));
}

std::string render_coverage_body(std::span<const std::string> newly_covered, std::size_t cumulative_size,
                                 std::size_t cap) {
    std::ostringstream os;
    os << "New lines covered: " << newly_covered.size() << " (cumulative " << cumulative_size << ")\n";
    if (newly_covered.empty()) {
        os << "No new lines were covered by this model.\n";
        return os.str();
    }
    const std::size_t shown = std::min(cap, newly_covered.size());
    for (std::size_t i = 0; i < shown; ++i) os << newly_covered[i] << '\n';
    if (shown < newly_covered.size()) os << "... and " << newly_covered.size() - shown << " more\n";
    return os.str();
}

std::string fence_code(std::string_view source, std::string_view language) {
    std::string out = "```";
    out += language;
    out += '\n';
    out += source;
    out += "\n```";
    return out;
}

std::string join_ops(std::span<const std::string> ops) {
    std::string out;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (i) out += ", ";
        out += ops[i];
    }
    return out;
}

Prompt build_default_prompt(const SutProfile& profile, std::span<const std::string> selected_ops) {
    if (selected_ops.empty()) throw std::invalid_argument("default prompt needs selected operators");
    auto vars = base_vars(profile);
    Prompt p;
    p.push_back({"system", render_template(kGenerationSystem, vars)});
    for (const auto& ex : profile.few_shot_examples) {
        auto ex_vars = vars;
        ex_vars["SELECTED_OPS"] = join_ops(ex.selected_ops);
        std::string instr = ex.instruction.empty() ? render_template(kDefaultInstruction, ex_vars)
                                                   : "Selected operators: " + ex_vars["SELECTED_OPS"] + "\n" +
                                                         render_template(ex.instruction, ex_vars);
        p.push_back({"user", std::move(instr)});
        p.push_back({"assistant", fence_code(ex.source, profile.code_language)});
    }
    vars["SELECTED_OPS"] = join_ops(selected_ops);
    p.push_back({"user", render_template(kDefaultInstruction, vars)});
    return p;
}

Prompt build_analysis_prompt(const SutProfile& profile, const TestCase& last_test, const FeedbackPayload& feedback,
                             const PromptOptions& options) {
    auto vars = base_vars(profile);
    vars["STRATEGY_HINT"] = std::string(strategy_hint(feedback.kind));

    std::string_view branch;
    std::string slot;
    switch (feedback.kind) {
    case FeedbackKind::Coverage:
        branch = kCoverageBranch;
        slot = "COVERAGE";
        break;
    case FeedbackKind::BugReport:
        branch = kBugBranch;
        slot = "BUG";
        break;
    case FeedbackKind::ExceptionLog:
        branch = kExceptionBranch;
        slot = "EXCEPTION";
        break;
    }
    std::string tmpl = std::string(kAnalysisHead) + std::string(branch) + std::string(kAnalysisTail);

    Prompt p;
    p.push_back({"system", render_template(kAnalysisSystem, vars)});
    for (const auto& ex : profile.analysis_examples) {
        if (ex.kind != feedback.kind) continue;
        auto ex_vars = vars;
        ex_vars["MODEL CODE"] = fence_code(ex.program, profile.code_language);
        ex_vars[slot] = ex.feedback;
        p.push_back({"user", render_template(tmpl, ex_vars)});
        p.push_back({"assistant", ex.summary});
    }
    vars["MODEL CODE"] = fence_code(last_test.source, profile.code_language);
    vars[slot] = feedback.kind == FeedbackKind::Coverage ? feedback.body
                                                         : truncate_middle(feedback.body, options.feedback_budget);
    p.push_back({"user", render_template(tmpl, vars)});
    return p;
}

Prompt build_feedback_prompt(const SutProfile& profile, const TestCase& last_test, const AnalysisSummary& summary,
                             std::span<const std::string> selected_ops, FeedbackKind goal) {
    if (summary.next_strategy.empty()) throw std::invalid_argument("analysis summary has no next testing strategy");
    if (selected_ops.empty()) throw std::invalid_argument("feedback prompt needs selected operators");
    auto vars = base_vars(profile);
    vars["GOAL"] = std::string(goal_text(goal));
    vars["INSTRUCTION"] = render_template(feedback_instruction(goal), vars);
    vars["MODEL CODE"] = fence_code(last_test.source, profile.code_language);
    vars["ANALYSIS SUMMARY"] = render_summary(summary);
    vars["SELECTED_OPS"] = join_ops(selected_ops);

    Prompt p;
    p.push_back({"system", render_template(kGenerationSystem, vars)});
    p.push_back({"user", render_template(kFeedbackBody, vars)});
    return p;
}

} // namespace dlfuzz
