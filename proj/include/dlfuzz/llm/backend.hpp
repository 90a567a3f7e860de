#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>

#include "dlfuzz/core/types.hpp"
#include "dlfuzz/llm/prompts.hpp"

namespace dlfuzz {

enum class AgentRole { Analysis, Generation };

std::string_view to_string(AgentRole role);
AgentRole agent_role_from_string(std::string_view s);

struct ChatRequest {
    AgentRole role = AgentRole::Generation;
    std::uint64_t iteration = 0;
    LoopMode mode = LoopMode::Default;
    Prompt messages;
    double temperature = 1.0;
    int max_tokens = 2048;
};

/// One request/response pair, logged verbatim with the iteration record.
struct ChatExchange {
    AgentRole role = AgentRole::Generation;
    Prompt prompt;
    double temperature = 1.0;
    int max_tokens = 2048;
    std::string response;
    std::string backend_id;

    bool operator==(const ChatExchange&) const = default;
};

void to_json(Json& j, const ChatExchange& e);
void from_json(const Json& j, ChatExchange& e);

struct LlmBackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ChatBackend {
  public:
    virtual ~ChatBackend() = default;
    /// Returns the reply text. Throws LlmBackendError when no reply can be obtained.
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

/// Settings of one agent's backend. The API key is read from the environment
/// variable named by `api_key_env`; it is never stored in configuration.
struct LlmSettings {
    std::string endpoint; // e.g. http://localhost:8000/v1
    std::string model;
    double temperature = 1.0;
    int max_tokens = 2048;
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_s = 120.0;

    bool operator==(const LlmSettings&) const = default;
};

void to_json(Json& j, const LlmSettings& s);
void from_json(const Json& j, LlmSettings& s);

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{500};
};

/// Chat-completions client: POST {endpoint}/chat/completions with
/// {"model", "messages", "temperature", "max_tokens"} and reads
/// choices[0].message.content from the reply.
class RemoteChatBackend final : public ChatBackend {
  public:
    explicit RemoteChatBackend(LlmSettings settings, RetryPolicy retry = {});
    std::string complete(const ChatRequest& request) override;
    std::string id() const override;

  private:
    LlmSettings settings_;
    RetryPolicy retry_;
    std::string host_;
    std::string path_;
};

/// Replays a transcript. Each JSON line holds {"agent", "response"} and optionally
/// "iteration" and "mode"; omitted keys match anything. The most specific entry wins:
/// (iteration, mode), then iteration, then mode, then neither.
class MockChatBackend final : public ChatBackend {
  public:
    explicit MockChatBackend(std::string id = "mock");
    static MockChatBackend from_file(const std::filesystem::path& path, std::string id = "mock");
    static MockChatBackend from_text(std::string_view jsonl, std::string id = "mock");

    void add(AgentRole role, std::optional<std::uint64_t> iteration, std::optional<LoopMode> mode,
             std::string response);
    std::string complete(const ChatRequest& request) override;
    std::string id() const override { return id_; }
    std::size_t size() const { return entries_.size(); }

  private:
    using Key = std::tuple<AgentRole, std::optional<std::uint64_t>, std::optional<LoopMode>>;
    std::string id_;
    std::map<Key, std::string> entries_;
};

} // namespace dlfuzz
