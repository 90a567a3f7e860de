#pragma once

// Executor wire protocol. A frame is a 4-byte big-endian unsigned body length followed
// by that many bytes of compact UTF-8 JSON with sorted keys. See docs/protocol.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dlfuzz/core/coverage.hpp"
#include "dlfuzz/oracle/tensor.hpp"

namespace dlfuzz {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::uint64_t kMaxWireElements = 1'000'000;
inline constexpr std::uint32_t kMaxFrameBytes = 256u << 20;

/// Recoverable execution failure: the iteration is recorded as a failure.
struct ExecutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or unexpected frame.
struct ProtocolError : ExecutionError {
    using ExecutionError::ExecutionError;
};

/// The shim cannot be (re)started or keeps dying: the campaign aborts.
struct ShimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Handshake {
    int protocol_version = kProtocolVersion;
    std::string profile;
    bool coverage = true;

    bool operator==(const Handshake&) const = default;
};

struct ExecRequest {
    std::uint64_t test_id = 0;
    std::string source;
    std::vector<Backend> backends{Backend::Eager, Backend::Compiled};
    double timeout_s = 10.0;
    bool want_coverage = true;
    std::uint64_t seed = 0;

    bool operator==(const ExecRequest&) const = default;
};

struct ExecResponse {
    std::uint64_t test_id = 0;
    std::vector<BackendResult> results;
    std::optional<CoverageSet> covered;
    /// Set when the shim itself failed; never a SUT exception.
    std::optional<std::string> shim_fault;

    const BackendResult& result(Backend b) const;
    bool operator==(const ExecResponse&) const = default;
};

using Message = std::variant<Handshake, ExecRequest, ExecResponse>;

Json to_wire(const Message& msg);
Message from_wire(const Json& j);

std::string encode_frame(std::string_view body);
/// Decodes exactly one frame; trailing or missing bytes are a ProtocolError.
std::string decode_frame(std::string_view frame);

std::string encode_message(const Message& msg);
Message decode_message(std::string_view frame);

/// Big-endian length of a frame header.
std::uint32_t frame_length(const unsigned char header[4]);

/// Replaces outputs above `cap` elements by a content digest plus min/max/mean.
TensorValue compact_tensor(TensorValue t, std::uint64_t cap = kMaxWireElements);

/// Checks that a response answers `req`: same test id, one well-formed result per
/// requested backend in request order. Throws ProtocolError.
void validate_response(const ExecRequest& req, const ExecResponse& resp);

} // namespace dlfuzz
