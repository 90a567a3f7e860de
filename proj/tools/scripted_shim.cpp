// Shim that runs scripted test programs (see dlfuzz/bridge/executor.hpp) over the frame
// protocol on stdin/stdout. Besides the backend directives it understands
//
//   @shim: crash-once     exit before answering, unless --crash-marker already exists
//   @shim: crash-always   exit before answering
//   @shim: garbage        answer with a frame that is not JSON
//
// and it honours sleep (waits the request timeout, then reports Timeout) and hang
// (never answers) literally, so the executor's deadlines can be exercised.

#include <CLI11.hpp>

#include <cerrno>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <unistd.h>

#include "dlfuzz/bridge/executor.hpp"

namespace {

using namespace dlfuzz;

bool read_exact(int fd, char* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        ssize_t r = ::read(fd, buf + got, n - got);
        if (r == 0) return false;
        if (r < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_all(int fd, std::string_view data) {
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t w = ::write(fd, data.data() + off, data.size() - off);
        if (w < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(w);
    }
    return true;
}

std::optional<std::string> read_frame(int fd) {
    unsigned char header[4];
    if (!read_exact(fd, reinterpret_cast<char*>(header), 4)) return std::nullopt;
    const auto len = frame_length(header);
    if (len > kMaxFrameBytes) return std::nullopt;
    std::string frame(reinterpret_cast<char*>(header), 4);
    frame.resize(4 + len);
    if (!read_exact(fd, frame.data() + 4, len)) return std::nullopt;
    return frame;
}

struct ShimSettings {
    std::string profile = "toy";
    int protocol_version = kProtocolVersion;
    bool coverage = true;
    std::string crash_marker;
};

ExecResponse handle(const ExecRequest& req, const ShimSettings& s) {
    ExecResponse resp;
    resp.test_id = req.test_id;
    ScriptedProgram prog;
    try {
        prog = parse_scripted_program(req.source);
    } catch (const std::exception& e) {
        resp.shim_fault = std::string("scripted program: ") + e.what();
        return resp;
    }
    bool any_ok = false;
    for (auto b : req.backends) {
        const auto& behavior = b == Backend::Eager ? prog.eager : prog.compiled;
        if (behavior.kind == ScriptedBehavior::Kind::Hang) {
            for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
        }
        if (behavior.kind == ScriptedBehavior::Kind::Sleep) {
            std::this_thread::sleep_for(std::chrono::duration<double>(req.timeout_s));
            resp.results.push_back(BackendResult::timeout(b));
            continue;
        }
        resp.results.push_back(run_scripted_backend(behavior, b, req.source, req.seed));
        any_ok = any_ok || resp.results.back().status == BackendStatus::Ok;
    }
    if (s.coverage && req.want_coverage && any_ok) resp.covered = prog.coverage;
    return resp;
}

} // namespace

int main(int argc, char** argv) {
    ShimSettings s;
    std::string workdir, coverage_tool;
    bool no_coverage = false;
    CLI::App app{"scripted executor shim", "dlfuzz-scripted-shim"};
    app.add_option("--profile", s.profile, "profile name announced in the handshake");
    app.add_option("--protocol-version", s.protocol_version, "protocol version announced in the handshake");
    app.add_flag("--no-coverage", no_coverage, "announce and report no coverage");
    app.add_option("--crash-marker", s.crash_marker, "file recording that crash-once already fired");
    app.add_option("--workdir", workdir, "accepted for interface compatibility");
    app.add_option("--coverage-tool-path", coverage_tool, "accepted for interface compatibility");
    CLI11_PARSE(app, argc, argv);
    s.coverage = !no_coverage;

    Handshake hello{s.protocol_version, s.profile, s.coverage};
    if (!write_all(STDOUT_FILENO, encode_message(hello))) return 1;

    while (auto frame = read_frame(STDIN_FILENO)) {
        Message msg;
        try {
            msg = decode_message(*frame);
        } catch (const std::exception& e) {
            std::cerr << "scripted shim: " << e.what() << "\n";
            return 2;
        }
        const auto* req = std::get_if<ExecRequest>(&msg);
        if (req == nullptr) {
            std::cerr << "scripted shim: expected an exec request\n";
            return 2;
        }
        if (req->source.find("@shim: crash-always") != std::string::npos) ::_exit(3);
        if (req->source.find("@shim: crash-once") != std::string::npos && !s.crash_marker.empty() &&
            !std::filesystem::exists(s.crash_marker)) {
            std::ofstream(s.crash_marker) << "crashed\n";
            ::_exit(3);
        }
        if (req->source.find("@shim: garbage") != std::string::npos) {
            if (!write_all(STDOUT_FILENO, encode_frame("this is not json"))) return 1;
            continue;
        }
        if (!write_all(STDOUT_FILENO, encode_message(handle(*req, s)))) return 1;
    }
    return 0;
}
