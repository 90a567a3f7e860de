#include "dlfuzz/bridge/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dlfuzz {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string("missing field \"") + key + "\"");
    try {
        return it->get<T>();
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("bad field \"") + key + "\": " + e.what());
    }
}

} // namespace

const BackendResult& ExecResponse::result(Backend b) const {
    for (const auto& r : results) {
        if (r.backend == b) return r;
    }
    throw std::out_of_range("no result for backend " + std::string(to_string(b)));
}

Json to_wire(const Message& msg) {
    return std::visit(
        [](const auto& m) -> Json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Handshake>) {
                return Json{{"type", "hello"},
                            {"protocol_version", m.protocol_version},
                            {"profile", m.profile},
                            {"shim_capabilities", {{"coverage", m.coverage}}}};
            } else if constexpr (std::is_same_v<T, ExecRequest>) {
                Json backends = Json::array();
                for (auto b : m.backends) backends.push_back(to_string(b));
                return Json{{"type", "exec"},          {"test_id", m.test_id},
                            {"source", m.source},      {"backends", std::move(backends)},
                            {"timeout_s", m.timeout_s}, {"want_coverage", m.want_coverage},
                            {"seed", m.seed}};
            } else {
                Json j{{"type", "result"}, {"test_id", m.test_id}, {"results", m.results}};
                if (m.covered) j["covered"] = m.covered->lines();
                if (m.shim_fault) j["shim_fault"] = *m.shim_fault;
                return j;
            }
        },
        msg);
}

Message from_wire(const Json& j) {
    if (!j.is_object()) throw ProtocolError("message is not an object");
    const auto type = field<std::string>(j, "type");
    try {
        if (type == "hello") {
            Handshake h;
            h.protocol_version = field<int>(j, "protocol_version");
            h.profile = field<std::string>(j, "profile");
            const auto caps = field<Json>(j, "shim_capabilities");
            if (!caps.is_object()) throw ProtocolError("shim_capabilities is not an object");
            h.coverage = field<bool>(caps, "coverage");
            return h;
        }
        if (type == "exec") {
            ExecRequest r;
            r.test_id = field<std::uint64_t>(j, "test_id");
            r.source = field<std::string>(j, "source");
            r.backends.clear();
            for (const auto& b : field<std::vector<std::string>>(j, "backends")) r.backends.push_back(backend_from_string(b));
            r.timeout_s = field<double>(j, "timeout_s");
            r.want_coverage = field<bool>(j, "want_coverage");
            r.seed = field<std::uint64_t>(j, "seed");
            if (r.backends.empty()) throw ProtocolError("exec request names no backend");
            if (!(r.timeout_s > 0.0)) throw ProtocolError("exec request timeout must be positive");
            return r;
        }
        if (type == "result") {
            ExecResponse r;
            r.test_id = field<std::uint64_t>(j, "test_id");
            r.results = field<std::vector<BackendResult>>(j, "results");
            if (j.contains("covered")) {
                auto lines = field<std::vector<std::string>>(j, "covered");
                r.covered = CoverageSet(lines.begin(), lines.end());
            }
            if (j.contains("shim_fault")) r.shim_fault = field<std::string>(j, "shim_fault");
            return r;
        }
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("invalid ") + type + " message: " + e.what());
    }
    throw ProtocolError("unknown message type \"" + type + "\"");
}

std::uint32_t frame_length(const unsigned char header[4]) {
    return (std::uint32_t{header[0]} << 24) | (std::uint32_t{header[1]} << 16) | (std::uint32_t{header[2]} << 8) |
           std::uint32_t{header[3]};
}

std::string encode_frame(std::string_view body) {
    if (body.size() > kMaxFrameBytes) throw ProtocolError("frame body too large");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out;
    out.reserve(4 + body.size());
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out.append(body);
    return out;
}

std::string decode_frame(std::string_view frame) {
    if (frame.size() < 4) throw ProtocolError("frame shorter than its header");
    const auto n = frame_length(reinterpret_cast<const unsigned char*>(frame.data()));
    if (n > kMaxFrameBytes) throw ProtocolError("frame length exceeds limit");
    if (frame.size() != 4 + static_cast<std::size_t>(n)) throw ProtocolError("frame length does not match payload");
    return std::string(frame.substr(4));
}

std::string encode_message(const Message& msg) { return encode_frame(to_wire(msg).dump()); }

Message decode_message(std::string_view frame) {
    const auto body = decode_frame(frame);
    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::exception& e) {
        throw ProtocolError(std::string("frame body is not JSON: ") + e.what());
    }
    return from_wire(j);
}

TensorValue compact_tensor(TensorValue t, std::uint64_t cap) {
    if (t.digest || t.data.size() <= cap) return t;
    Json data = Json::array();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    for (double v : t.data) {
        data.push_back(encode_number(v));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    TensorDigest d;
    d.digest = to_hex(fnv1a64(data.dump()));
    d.min = lo;
    d.max = hi;
    d.mean = sum / static_cast<double>(t.data.size());
    t.data.clear();
    t.digest = std::move(d);
    return t;
}

void validate_response(const ExecRequest& req, const ExecResponse& resp) {
    if (resp.test_id != req.test_id)
        throw ProtocolError("response test_id " + std::to_string(resp.test_id) + " does not match request " +
                            std::to_string(req.test_id));
    if (resp.shim_fault) return;
    if (resp.results.size() != req.backends.size()) throw ProtocolError("response result count does not match request");
    for (std::size_t i = 0; i < req.backends.size(); ++i) {
        if (resp.results[i].backend != req.backends[i]) throw ProtocolError("response backends out of order");
        if (!resp.results[i].well_formed()) throw ProtocolError("malformed backend result");
    }
    const bool any_ok = std::any_of(resp.results.begin(), resp.results.end(),
                                    [](const BackendResult& r) { return r.status == BackendStatus::Ok; });
    if (resp.covered && !(req.want_coverage && any_ok))
        throw ProtocolError("coverage reported although no backend ran or none was requested");
}

} // namespace dlfuzz
