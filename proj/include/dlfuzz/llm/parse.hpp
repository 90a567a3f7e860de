#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "dlfuzz/llm/profile.hpp"
#include "dlfuzz/llm/prompts.hpp"

namespace dlfuzz {

struct GenerationParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AnalysisParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Extracts the test program from a generation response: the body of the first fenced
/// block, or the whole response when it has no fence. The result must contain every
/// code marker of the profile.
std::string parse_code(std::string_view response, const SutProfile& profile);

/// Splits an analysis response on its "Explanation", "Reasons" and "Next testing
/// strategy" headings. Without a strategy heading the whole response becomes the
/// strategy.
AnalysisSummary parse_summary(std::string_view response);

} // namespace dlfuzz
