#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "dlfuzz/core/types.hpp"
#include "dlfuzz/llm/backend.hpp"
#include "dlfuzz/opsel/opsel.hpp"
#include "dlfuzz/oracle/oracle.hpp"

namespace dlfuzz {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shim command that selects the in-process scripted executor instead of a child process.
inline constexpr const char* kScriptedShim = "scripted";

struct CampaignConfig {
    std::filesystem::path profile;
    std::filesystem::path opset;
    std::optional<std::uint64_t> iterations;
    std::optional<double> hours;
    std::uint64_t seed = 0;
    ToleranceConfig tolerance;
    LlmSettings analysis_llm = default_analysis_llm();
    LlmSettings generation_llm;
    /// When set, both agents replay this transcript instead of calling an endpoint.
    std::optional<std::filesystem::path> mock_transcript;
    std::string shim_cmd = kScriptedShim;
    std::filesystem::path workdir;
    SAParams sa;
    double exec_timeout_s = 10.0;
    double grace_s = 2.0;
    double handshake_timeout_s = 30.0;
    std::uint32_t repair_window = 1;
    std::uint64_t snapshot_interval = 10;
    std::size_t feedback_budget = 4000;
    std::size_t coverage_list_cap = 200;

    static LlmSettings default_analysis_llm() {
        LlmSettings s;
        s.temperature = 0.0;
        return s;
    }

    bool operator==(const CampaignConfig&) const = default;
};

/// Unknown keys are rejected so that misspelled settings do not pass silently.
void to_json(Json& j, const CampaignConfig& c);
void from_json(const Json& j, CampaignConfig& c);

/// Reads a JSON config; relative paths are taken relative to the file's directory.
CampaignConfig load_config(const std::filesystem::path& path);

/// Makes every path absolute against `base`.
void resolve_paths(CampaignConfig& c, const std::filesystem::path& base);

/// Throws ConfigError unless exactly one budget is set, referenced files exist and
/// numeric settings are in range.
void validate(const CampaignConfig& c);

} // namespace dlfuzz
