#include "dlfuzz/config/config.hpp"

#include <fstream>
#include <set>

namespace dlfuzz {

namespace fs = std::filesystem;

void to_json(Json& j, const CampaignConfig& c) {
    j = Json{{"profile", c.profile.string()},
             {"opset", c.opset.string()},
             {"seed", c.seed},
             {"tolerance", c.tolerance},
             {"analysis_llm", c.analysis_llm},
             {"generation_llm", c.generation_llm},
             {"shim_cmd", c.shim_cmd},
             {"workdir", c.workdir.string()},
             {"sa", c.sa},
             {"exec_timeout_s", c.exec_timeout_s},
             {"grace_s", c.grace_s},
             {"handshake_timeout_s", c.handshake_timeout_s},
             {"repair_window", c.repair_window},
             {"snapshot_interval", c.snapshot_interval},
             {"feedback_budget", c.feedback_budget},
             {"coverage_list_cap", c.coverage_list_cap}};
    if (c.iterations) j["iterations"] = *c.iterations;
    if (c.hours) j["hours"] = *c.hours;
    if (c.mock_transcript) j["mock_transcript"] = c.mock_transcript->string();
}

void from_json(const Json& j, CampaignConfig& c) {
    static const std::set<std::string> known{
        "profile",        "opset",       "iterations",     "hours",          "seed",
        "tolerance",      "analysis_llm", "generation_llm", "mock_transcript", "shim_cmd",
        "workdir",        "sa",          "exec_timeout_s", "grace_s",        "handshake_timeout_s",
        "repair_window",  "snapshot_interval", "feedback_budget", "coverage_list_cap"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");

    try {
        CampaignConfig d;
        c.profile = j.value("profile", std::string{});
        c.opset = j.value("opset", std::string{});
        c.iterations.reset();
        c.hours.reset();
        if (auto it = j.find("iterations"); it != j.end() && !it->is_null()) c.iterations = it->get<std::uint64_t>();
        if (auto it = j.find("hours"); it != j.end() && !it->is_null()) c.hours = it->get<double>();
        c.seed = j.value("seed", d.seed);
        c.tolerance = j.value("tolerance", d.tolerance);
        c.analysis_llm = d.analysis_llm;
        if (auto it = j.find("analysis_llm"); it != j.end()) {
            c.analysis_llm = it->get<LlmSettings>();
            if (!it->contains("temperature")) c.analysis_llm.temperature = d.analysis_llm.temperature;
        }
        c.generation_llm = j.value("generation_llm", d.generation_llm);
        c.mock_transcript.reset();
        if (auto it = j.find("mock_transcript"); it != j.end() && !it->is_null())
            c.mock_transcript = it->get<std::string>();
        c.shim_cmd = j.value("shim_cmd", d.shim_cmd);
        c.workdir = j.value("workdir", std::string{});
        c.sa = j.value("sa", d.sa);
        c.exec_timeout_s = j.value("exec_timeout_s", d.exec_timeout_s);
        c.grace_s = j.value("grace_s", d.grace_s);
        c.handshake_timeout_s = j.value("handshake_timeout_s", d.handshake_timeout_s);
        c.repair_window = j.value("repair_window", d.repair_window);
        c.snapshot_interval = j.value("snapshot_interval", d.snapshot_interval);
        c.feedback_budget = j.value("feedback_budget", d.feedback_budget);
        c.coverage_list_cap = j.value("coverage_list_cap", d.coverage_list_cap);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

void resolve_paths(CampaignConfig& c, const fs::path& base) {
    auto resolve = [&](fs::path& p) {
        if (!p.empty() && p.is_relative()) p = base / p;
        if (!p.empty()) p = p.lexically_normal();
    };
    resolve(c.profile);
    resolve(c.opset);
    resolve(c.workdir);
    if (c.mock_transcript) resolve(*c.mock_transcript);
}

CampaignConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    auto c = j.get<CampaignConfig>();
    resolve_paths(c, fs::absolute(path).parent_path());
    return c;
}

void validate(const CampaignConfig& c) {
    if (c.iterations.has_value() == c.hours.has_value())
        throw ConfigError("exactly one of iterations and hours must be set");
    if (c.hours && !(*c.hours >= 0.0)) throw ConfigError("hours must be non-negative");
    auto require_file = [](const fs::path& p, const char* what) {
        if (p.empty()) throw ConfigError(std::string(what) + " is not set");
        if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " " + p.string() + " does not exist");
    };
    require_file(c.profile, "profile");
    require_file(c.opset, "operator set");
    if (c.mock_transcript) {
        require_file(*c.mock_transcript, "mock transcript");
    } else {
        for (const auto* llm : {&c.analysis_llm, &c.generation_llm})
            if (llm->endpoint.empty() || llm->model.empty())
                throw ConfigError("LLM endpoint and model are required unless a mock transcript is given");
    }
    if (c.workdir.empty()) throw ConfigError("workdir is not set");
    if (c.shim_cmd.empty()) throw ConfigError("shim command is empty");
    try {
        c.sa.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("SA parameters: ") + e.what());
    }
    if (!(c.tolerance.atol >= 0.0) || !(c.tolerance.rtol >= 0.0))
        throw ConfigError("tolerances must be non-negative");
    if (!(c.exec_timeout_s > 0.0) || !(c.grace_s >= 0.0) || !(c.handshake_timeout_s > 0.0))
        throw ConfigError("timeouts must be positive");
    if (c.snapshot_interval == 0) throw ConfigError("snapshot_interval must be positive");
    if (c.feedback_budget < 64) throw ConfigError("feedback_budget must be at least 64 characters");
}

} // namespace dlfuzz
