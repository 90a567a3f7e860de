#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "dlfuzz/llm/backend.hpp"

namespace dlfuzz {
namespace {

/// Local chat-completions endpoint answering from a handler.
class FakeServer {
  public:
    explicit FakeServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ChatRequest sample_request() {
    ChatRequest r;
    r.messages = {{"system", "be brief"}, {"user", "hi"}};
    r.temperature = 0.0;
    r.max_tokens = 64;
    return r;
}

RetryPolicy fast_retry() { return RetryPolicy{3, std::chrono::milliseconds(10)}; }

TEST(RemoteBackend, SendsChatCompletionRequest) {
    Json seen;
    std::string auth;
    FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen = Json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello back"}}]})",
                        "application/json");
    });
    ::setenv("DLFUZZ_TEST_KEY", "sekrit", 1);
    LlmSettings s;
    s.endpoint = server.endpoint() + "/";
    s.model = "tiny";
    s.api_key_env = "DLFUZZ_TEST_KEY";
    s.timeout_s = 5;
    RemoteChatBackend backend(s, fast_retry());
    EXPECT_EQ(backend.complete(sample_request()), "hello back");
    EXPECT_EQ(seen["model"], "tiny");
    EXPECT_EQ(seen["temperature"], 0.0);
    EXPECT_EQ(seen["max_tokens"], 64);
    EXPECT_EQ(seen["messages"], Json::parse(R"([{"role":"system","content":"be brief"},{"role":"user","content":"hi"}])"));
    EXPECT_EQ(auth, "Bearer sekrit");
    ::unsetenv("DLFUZZ_TEST_KEY");
}

TEST(RemoteBackend, RetriesTransientErrors) {
    std::atomic<int> calls{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"choices":[{"message":{"content":"third time"}}]})", "application/json");
    });
    RemoteChatBackend backend(LlmSettings{server.endpoint(), "m", 1.0, 10, "DLFUZZ_UNSET_KEY", 5.0}, fast_retry());
    EXPECT_EQ(backend.complete(sample_request()), "third time");
    EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, GivesUpAfterLastAttempt) {
    std::atomic<int> calls{0};
    FakeServer server([&](const httplib::Request&, httplib::Response& res) {
        ++calls;
        res.set_content(R"({"unexpected":true})", "application/json");
    });
    RemoteChatBackend backend(LlmSettings{server.endpoint(), "m", 1.0, 10, "DLFUZZ_UNSET_KEY", 5.0}, fast_retry());
    EXPECT_THROW(backend.complete(sample_request()), LlmBackendError);
    EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, UnreachableEndpointIsABackendError) {
    RemoteChatBackend backend(LlmSettings{"http://127.0.0.1:1/v1", "m", 1.0, 10, "DLFUZZ_UNSET_KEY", 1.0},
                              RetryPolicy{2, std::chrono::milliseconds(1)});
    EXPECT_THROW(backend.complete(sample_request()), LlmBackendError);
}

} // namespace
} // namespace dlfuzz
