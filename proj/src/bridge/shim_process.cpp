#include "dlfuzz/bridge/shim_process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace dlfuzz {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

} // namespace

ChildProcess::ChildProcess(const std::string& command) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) throw ShimError(errno_text("socketpair"));

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw ShimError(errno_text("fork"));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(sv[1]);
    pid_ = pid;
    fd_ = sv[0];
}

ChildProcess::~ChildProcess() { kill(); }

void ChildProcess::kill() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        ::kill(-pid_, SIGKILL);
        ::kill(pid_, SIGKILL);
        int status = 0;
        while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
        }
        pid_ = -1;
    }
}

bool ChildProcess::alive() {
    if (pid_ <= 0) return false;
    int status = 0;
    return ::waitpid(pid_, &status, WNOHANG) == 0;
}

void ChildProcess::write_frame(std::string_view frame) {
    std::size_t off = 0;
    while (off < frame.size()) {
        ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ShimError(errno_text("shim write"));
        }
        off += static_cast<std::size_t>(n);
    }
}

bool ChildProcess::read_exact(char* buf, std::size_t n, Clock::time_point deadline) {
    std::size_t got = 0;
    while (got < n) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) return false;
        pollfd p{fd_, POLLIN, 0};
        int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1000)));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw ShimError(errno_text("poll"));
        }
        if (rc == 0) continue;
        ssize_t r = ::recv(fd_, buf + got, n - got, 0);
        if (r < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            throw ShimError(errno_text("shim read"));
        }
        if (r == 0) throw ShimError("shim closed its output");
        got += static_cast<std::size_t>(r);
    }
    return true;
}

std::optional<std::string> ChildProcess::read_frame(Clock::time_point deadline) {
    unsigned char header[4];
    if (!read_exact(reinterpret_cast<char*>(header), 4, deadline)) return std::nullopt;
    const auto n = frame_length(header);
    if (n > kMaxFrameBytes) throw ProtocolError("shim frame length exceeds limit");
    std::string frame(4 + static_cast<std::size_t>(n), '\0');
    std::memcpy(frame.data(), header, 4);
    if (!read_exact(frame.data() + 4, n, deadline)) return std::nullopt;
    return frame;
}

ShimExecutor::ShimExecutor(ShimOptions options) : options_(std::move(options)) {}

void ShimExecutor::spawn() {
    child_.reset();
    child_.emplace(options_.command);
    ++spawns_;
    const auto deadline = ChildProcess::Clock::now() +
                          std::chrono::duration_cast<ChildProcess::Clock::duration>(
                              std::chrono::duration<double>(options_.handshake_timeout_s));
    std::optional<std::string> frame;
    try {
        frame = child_->read_frame(deadline);
    } catch (const std::exception& e) {
        child_.reset();
        throw ShimError(std::string("shim failed before handshake: ") + e.what());
    }
    if (!frame) {
        child_.reset();
        throw ShimError("shim handshake timed out");
    }
    Message msg;
    try {
        msg = decode_message(*frame);
    } catch (const ProtocolError& e) {
        child_.reset();
        throw ShimError(std::string("malformed handshake: ") + e.what());
    }
    const auto* hello = std::get_if<Handshake>(&msg);
    if (!hello) {
        child_.reset();
        throw ShimError("shim did not open with a handshake");
    }
    if (hello->protocol_version != kProtocolVersion) {
        child_.reset();
        throw ShimError("shim speaks protocol version " + std::to_string(hello->protocol_version) + ", expected " +
                        std::to_string(kProtocolVersion));
    }
    if (hello->profile != options_.profile) {
        child_.reset();
        throw ShimError("shim serves profile \"" + hello->profile + "\", expected \"" + options_.profile + "\"");
    }
    handshake_ = *hello;
}

const Handshake& ShimExecutor::ensure_started() {
    if (!child_ || !child_->alive()) spawn();
    return handshake_;
}

ExecResponse ShimExecutor::execute(const ExecRequest& req) {
    const std::string frame = encode_message(req);
    double budget = options_.grace_s;
    for (std::size_t i = 0; i < req.backends.size(); ++i) budget += req.timeout_s;

    for (int attempt = 0;; ++attempt) {
        ensure_started();
        const auto deadline = ChildProcess::Clock::now() +
                              std::chrono::duration_cast<ChildProcess::Clock::duration>(
                                  std::chrono::duration<double>(budget));
        std::optional<std::string> reply;
        try {
            child_->write_frame(frame);
            reply = child_->read_frame(deadline);
        } catch (const ShimError& e) {
            child_.reset();
            if (attempt >= 1) throw ShimError(std::string("shim died twice on one request: ") + e.what());
            continue;
        } catch (const ProtocolError&) {
            child_.reset();
            throw;
        }

        if (!reply) {
            // Wedged: kill it; the next request starts a fresh shim.
            child_.reset();
            ExecResponse resp;
            resp.test_id = req.test_id;
            for (auto b : req.backends) resp.results.push_back(BackendResult::timeout(b));
            return resp;
        }

        Message msg;
        try {
            msg = decode_message(*reply);
        } catch (const ProtocolError&) {
            child_.reset();
            throw;
        }
        auto* resp = std::get_if<ExecResponse>(&msg);
        if (!resp) {
            child_.reset();
            throw ProtocolError("shim answered an exec request with a non-result message");
        }
        try {
            validate_response(req, *resp);
        } catch (const ProtocolError&) {
            child_.reset();
            throw;
        }
        if (resp->shim_fault) throw ExecutionError("shim fault: " + *resp->shim_fault);
        return std::move(*resp);
    }
}

} // namespace dlfuzz
