#include "dlfuzz/llm/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace dlfuzz {

std::string_view to_string(AgentRole role) { return role == AgentRole::Analysis ? "analysis" : "generation"; }

AgentRole agent_role_from_string(std::string_view s) {
    if (s == "analysis") return AgentRole::Analysis;
    if (s == "generation") return AgentRole::Generation;
    throw std::invalid_argument("unknown agent role: " + std::string(s));
}

void to_json(Json& j, const ChatExchange& e) {
    j = Json{{"role", to_string(e.role)},
             {"prompt", e.prompt},
             {"temperature", e.temperature},
             {"max_tokens", e.max_tokens},
             {"response", e.response},
             {"backend_id", e.backend_id}};
}

void from_json(const Json& j, ChatExchange& e) {
    e.role = agent_role_from_string(j.at("role").get<std::string>());
    e.prompt = j.at("prompt").get<Prompt>();
    e.temperature = j.at("temperature").get<double>();
    e.max_tokens = j.at("max_tokens").get<int>();
    e.response = j.at("response").get<std::string>();
    e.backend_id = j.at("backend_id").get<std::string>();
}

void to_json(Json& j, const LlmSettings& s) {
    j = Json{{"endpoint", s.endpoint},       {"model", s.model},
             {"temperature", s.temperature}, {"max_tokens", s.max_tokens},
             {"api_key_env", s.api_key_env}, {"timeout_s", s.timeout_s}};
}

void from_json(const Json& j, LlmSettings& s) {
    LlmSettings d;
    s.endpoint = j.value("endpoint", d.endpoint);
    s.model = j.value("model", d.model);
    s.temperature = j.value("temperature", d.temperature);
    s.max_tokens = j.value("max_tokens", d.max_tokens);
    s.api_key_env = j.value("api_key_env", d.api_key_env);
    s.timeout_s = j.value("timeout_s", d.timeout_s);
}

RemoteChatBackend::RemoteChatBackend(LlmSettings settings, RetryPolicy retry)
    : settings_(std::move(settings)), retry_(retry) {
    const auto& url = settings_.endpoint;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_.empty() && path_.back() == '/') path_.pop_back();
    path_ += "/chat/completions";
}

std::string RemoteChatBackend::id() const { return settings_.model + "@" + host_; }

std::string RemoteChatBackend::complete(const ChatRequest& request) {
    Json body{{"model", settings_.model},
              {"messages", request.messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(settings_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    for (int attempt = 0; attempt < retry_.attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));

        httplib::Client cli(host_);
        const auto timeout = std::chrono::duration<double>(settings_.timeout_s);
        cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
        cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

        auto res = cli.Post(path_, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            auto reply = Json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const Json::exception& e) {
            last_error = std::string("malformed reply: ") + e.what();
        }
    }
    throw LlmBackendError(id() + ": " + last_error + " after " + std::to_string(retry_.attempts) + " attempts");
}

MockChatBackend::MockChatBackend(std::string id) : id_(std::move(id)) {}

void MockChatBackend::add(AgentRole role, std::optional<std::uint64_t> iteration, std::optional<LoopMode> mode,
                          std::string response) {
    entries_[Key{role, iteration, mode}] = std::move(response);
}

MockChatBackend MockChatBackend::from_text(std::string_view jsonl, std::string id) {
    MockChatBackend mock(std::move(id));
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            auto j = Json::parse(line);
            std::optional<std::uint64_t> iteration;
            std::optional<LoopMode> mode;
            if (j.contains("iteration") && !j["iteration"].is_null()) iteration = j["iteration"].get<std::uint64_t>();
            if (j.contains("mode") && !j["mode"].is_null()) mode = loop_mode_from_string(j["mode"].get<std::string>());
            mock.add(agent_role_from_string(j.at("agent").get<std::string>()), iteration, mode,
                     j.at("response").get<std::string>());
        } catch (const std::exception& e) {
            throw std::invalid_argument("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return mock;
}

MockChatBackend MockChatBackend::from_file(const std::filesystem::path& path, std::string id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open transcript: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), std::move(id));
}

std::string MockChatBackend::complete(const ChatRequest& request) {
    const Key candidates[] = {
        {request.role, request.iteration, request.mode},
        {request.role, request.iteration, std::nullopt},
        {request.role, std::nullopt, request.mode},
        {request.role, std::nullopt, std::nullopt},
    };
    for (const auto& key : candidates) {
        if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    throw LlmBackendError("transcript has no " + std::string(to_string(request.role)) + " response for iteration " +
                          std::to_string(request.iteration));
}

} // namespace dlfuzz
