#include "dlfuzz/oracle/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace dlfuzz {

std::uint64_t TensorValue::element_count() const {
    std::uint64_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

bool TensorValue::well_formed() const {
    if (digest) return data.empty();
    return data.size() == element_count();
}

TensorValue TensorValue::vector(std::vector<double> values, std::string dtype) {
    TensorValue t;
    t.shape = {values.size()};
    t.dtype = std::move(dtype);
    t.data = std::move(values);
    return t;
}

TensorValue TensorValue::scalar(double value, std::string dtype) {
    TensorValue t;
    t.dtype = std::move(dtype);
    t.data = {value};
    return t;
}

bool same_bits(const TensorValue& a, const TensorValue& b) {
    if (a.shape != b.shape || a.dtype != b.dtype || a.digest != b.digest) return false;
    if (a.data.size() != b.data.size()) return false;
    return a.data.empty() || std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

bool operator==(const TensorValue& a, const TensorValue& b) { return same_bits(a, b); }

bool operator==(const BackendResult& a, const BackendResult& b) {
    return a.backend == b.backend && a.status == b.status && a.outputs == b.outputs &&
           a.exception == b.exception;
}

std::string_view to_string(Backend b) { return b == Backend::Eager ? "eager" : "compiled"; }

std::string_view to_string(BackendStatus s) {
    switch (s) {
    case BackendStatus::Ok: return "ok";
    case BackendStatus::Exception: return "exception";
    case BackendStatus::Timeout: return "timeout";
    }
    return "?";
}

Backend backend_from_string(std::string_view s) {
    if (s == "eager") return Backend::Eager;
    if (s == "compiled") return Backend::Compiled;
    throw std::invalid_argument("unknown backend: " + std::string(s));
}

BackendStatus backend_status_from_string(std::string_view s) {
    if (s == "ok") return BackendStatus::Ok;
    if (s == "exception") return BackendStatus::Exception;
    if (s == "timeout") return BackendStatus::Timeout;
    throw std::invalid_argument("unknown backend status: " + std::string(s));
}

bool BackendResult::well_formed() const {
    switch (status) {
    case BackendStatus::Ok: return !exception.has_value();
    case BackendStatus::Exception: return exception.has_value() && outputs.empty();
    case BackendStatus::Timeout: return !exception.has_value() && outputs.empty();
    }
    return false;
}

BackendResult BackendResult::ok(Backend b, std::vector<TensorValue> outputs) {
    return BackendResult{b, BackendStatus::Ok, std::move(outputs), std::nullopt};
}

BackendResult BackendResult::raised(Backend b, ExceptionInfo info) {
    return BackendResult{b, BackendStatus::Exception, {}, std::move(info)};
}

BackendResult BackendResult::timeout(Backend b) { return BackendResult{b, BackendStatus::Timeout, {}, std::nullopt}; }

Json encode_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double decode_number(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw std::invalid_argument("not a tensor element: " + j.dump());
}

void to_json(Json& j, const TensorValue& t) {
    j = Json{{"shape", t.shape}, {"dtype", t.dtype}};
    if (t.digest) {
        j["digest"] = Json{{"hash", t.digest->digest},
                           {"min", encode_number(t.digest->min)},
                           {"max", encode_number(t.digest->max)},
                           {"mean", encode_number(t.digest->mean)}};
    } else {
        Json data = Json::array();
        for (double v : t.data) data.push_back(encode_number(v));
        j["data"] = std::move(data);
    }
}

void from_json(const Json& j, TensorValue& t) {
    t.shape = j.at("shape").get<std::vector<std::uint64_t>>();
    t.dtype = j.at("dtype").get<std::string>();
    t.data.clear();
    t.digest.reset();
    if (auto it = j.find("digest"); it != j.end()) {
        TensorDigest d;
        d.digest = it->at("hash").get<std::string>();
        d.min = decode_number(it->at("min"));
        d.max = decode_number(it->at("max"));
        d.mean = decode_number(it->at("mean"));
        t.digest = std::move(d);
    } else {
        const auto& data = j.at("data");
        if (!data.is_array()) throw std::invalid_argument("tensor data must be an array");
        t.data.reserve(data.size());
        for (const auto& v : data) t.data.push_back(decode_number(v));
    }
    if (!t.well_formed()) throw std::invalid_argument("tensor data size does not match shape");
}

void to_json(Json& j, const ExceptionInfo& e) {
    j = Json{{"type", e.type}, {"message", e.message}, {"frames", e.frames}};
}

void from_json(const Json& j, ExceptionInfo& e) {
    e.type = j.at("type").get<std::string>();
    e.message = j.at("message").get<std::string>();
    e.frames = j.value("frames", std::vector<std::string>{});
}

void to_json(Json& j, const BackendResult& r) {
    j = Json{{"backend", to_string(r.backend)}, {"status", to_string(r.status)}};
    if (r.status == BackendStatus::Ok) j["outputs"] = r.outputs;
    if (r.exception) j["exception"] = *r.exception;
}

void from_json(const Json& j, BackendResult& r) {
    r.backend = backend_from_string(j.at("backend").get<std::string>());
    r.status = backend_status_from_string(j.at("status").get<std::string>());
    r.outputs.clear();
    r.exception.reset();
    if (r.status == BackendStatus::Ok) r.outputs = j.at("outputs").get<std::vector<TensorValue>>();
    if (auto it = j.find("exception"); it != j.end()) r.exception = it->get<ExceptionInfo>();
    if (!r.well_formed()) throw std::invalid_argument("backend result fields do not match its status");
}

} // namespace dlfuzz
