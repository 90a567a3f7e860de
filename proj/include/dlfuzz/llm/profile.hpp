#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlfuzz/core/types.hpp"

namespace dlfuzz {

struct FewShotExample {
    std::vector<std::string> selected_ops;
    std::string instruction; // may use [LIBRARY]
    std::string source;

    bool operator==(const FewShotExample&) const = default;
};

/// A <program, feedback, summary> triplet shown to the analysis agent.
struct AnalysisExample {
    FeedbackKind kind = FeedbackKind::Coverage;
    std::string program;
    std::string feedback;
    std::string summary;

    bool operator==(const AnalysisExample&) const = default;
};

/// Everything the prompt builders and parsers need to know about one system under test.
struct SutProfile {
    std::string name;
    std::string library_token;
    std::string code_language = "python";
    std::vector<FewShotExample> few_shot_examples;
    std::vector<AnalysisExample> analysis_examples;
    std::vector<std::string> code_markers;
    std::string eager_label = "eager";
    std::string compiled_label = "compiled";

    /// Throws std::invalid_argument unless there is a few-shot example and a code marker.
    void validate() const;

    bool operator==(const SutProfile&) const = default;
};

void to_json(Json& j, const FewShotExample& e);
void from_json(const Json& j, FewShotExample& e);
void to_json(Json& j, const AnalysisExample& e);
void from_json(const Json& j, AnalysisExample& e);
void to_json(Json& j, const SutProfile& p);
void from_json(const Json& j, SutProfile& p);

/// Loads profile.json. "source_file" / "program_file" entries are read relative to the
/// profile's directory and inlined.
SutProfile load_profile(const std::filesystem::path& path);

} // namespace dlfuzz
