#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <sys/types.h>

#include "dlfuzz/bridge/executor.hpp"

namespace dlfuzz {

/// A child process speaking the frame protocol on its stdin/stdout. The command runs
/// under /bin/sh in its own process group; destruction kills the group.
class ChildProcess {
  public:
    using Clock = std::chrono::steady_clock;

    explicit ChildProcess(const std::string& command);
    ~ChildProcess();
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    /// Throws ShimError when the child has gone away.
    void write_frame(std::string_view frame);
    /// One full frame, or nullopt when `deadline` passes first. Throws ShimError on EOF
    /// and ProtocolError on an oversized header.
    std::optional<std::string> read_frame(Clock::time_point deadline);

    void kill();
    bool alive();
    pid_t pid() const { return pid_; }

  private:
    bool read_exact(char* buf, std::size_t n, Clock::time_point deadline);

    pid_t pid_ = -1;
    int fd_ = -1;
};

struct ShimOptions {
    std::string command;
    std::string profile;
    double handshake_timeout_s = 30.0;
    /// Slack added to the summed backend timeouts before the shim is declared wedged.
    double grace_s = 2.0;
};

/// Executor backed by a long-lived shim process. A shim that dies during a request is
/// respawned once and the request retried; a second death raises ShimError. A shim
/// that misses the outer deadline is killed and every requested backend reports
/// Timeout.
class ShimExecutor final : public Executor {
  public:
    explicit ShimExecutor(ShimOptions options);

    /// Starts the shim if needed and returns its handshake.
    const Handshake& ensure_started();
    ExecResponse execute(const ExecRequest& req) override;
    std::string id() const override { return "shim:" + options_.command; }

    std::size_t spawn_count() const { return spawns_; }
    pid_t pid() const { return child_ ? child_->pid() : -1; }

  private:
    void spawn();

    ShimOptions options_;
    std::optional<ChildProcess> child_;
    Handshake handshake_;
    std::size_t spawns_ = 0;
};

} // namespace dlfuzz
