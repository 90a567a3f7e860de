#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dlfuzz/core/types.hpp"

namespace dlfuzz {

/// Summary carried instead of raw data for outputs above the wire size cap.
struct TensorDigest {
    std::string digest;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;

    bool operator==(const TensorDigest&) const = default;
};

/// Output tensor of one backend, flattened row-major. Either `data` or `digest` is
/// populated.
struct TensorValue {
    std::vector<std::uint64_t> shape;
    std::string dtype = "float32";
    std::vector<double> data;
    std::optional<TensorDigest> digest;

    /// Number of elements implied by `shape` (1 for a scalar).
    std::uint64_t element_count() const;
    /// |data| matches the shape, or a digest stands in for it.
    bool well_formed() const;

    static TensorValue vector(std::vector<double> values, std::string dtype = "float32");
    static TensorValue scalar(double value, std::string dtype = "float32");
};

bool same_bits(const TensorValue& a, const TensorValue& b);

enum class Backend { Eager, Compiled };
enum class BackendStatus { Ok, Exception, Timeout };

std::string_view to_string(Backend b);
std::string_view to_string(BackendStatus s);
Backend backend_from_string(std::string_view s);
BackendStatus backend_status_from_string(std::string_view s);

struct ExceptionInfo {
    std::string type;
    std::string message;
    /// Stack frames, innermost first, already truncated to SUT frames.
    std::vector<std::string> frames;

    bool operator==(const ExceptionInfo&) const = default;
};

struct BackendResult {
    Backend backend = Backend::Eager;
    BackendStatus status = BackendStatus::Ok;
    std::vector<TensorValue> outputs;
    std::optional<ExceptionInfo> exception;

    /// outputs present iff Ok, exception present iff Exception.
    bool well_formed() const;

    static BackendResult ok(Backend b, std::vector<TensorValue> outputs);
    static BackendResult raised(Backend b, ExceptionInfo info);
    static BackendResult timeout(Backend b);
};

bool operator==(const TensorValue& a, const TensorValue& b);
bool operator==(const BackendResult& a, const BackendResult& b);

void to_json(Json& j, const TensorValue& t);
void from_json(const Json& j, TensorValue& t);
void to_json(Json& j, const ExceptionInfo& e);
void from_json(const Json& j, ExceptionInfo& e);
void to_json(Json& j, const BackendResult& r);
void from_json(const Json& j, BackendResult& r);

/// JSON has no NaN/Inf; non-finite values travel as "nan", "inf", "-inf".
Json encode_number(double v);
double decode_number(const Json& j);

} // namespace dlfuzz
