#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace dlfuzz {

using Json = nlohmann::json;

/// Prompt mode of one iteration. Default generation has no feedback, FeedbackGuided
/// follows an analysis summary, Repair asks for a fix of the previous invalid test.
enum class LoopMode { Default, FeedbackGuided, Repair };

/// Coarse outcome of one iteration as seen by the mode machine.
enum class IterationKind { Pass, Bug, Invalid, Failure };

enum class FeedbackKind { Coverage, BugReport, ExceptionLog };

std::string_view to_string(LoopMode mode);
std::string_view to_string(IterationKind kind);
std::string_view to_string(FeedbackKind kind);
LoopMode loop_mode_from_string(std::string_view s);
IterationKind iteration_kind_from_string(std::string_view s);
FeedbackKind feedback_kind_from_string(std::string_view s);

/// One operator of the system under test together with its feedback counters.
struct OperatorRecord {
    std::string name;
    std::optional<std::string> signature;
    std::uint64_t used_times = 0;
    std::uint64_t exp_count = 0;
    std::uint64_t cov_count = 0; // newly covered lines attributed to this operator

    bool operator==(const OperatorRecord&) const = default;
};

/// Operator records in operator-set order, addressable by name.
class OperatorTable {
  public:
    OperatorTable() = default;
    explicit OperatorTable(std::vector<OperatorRecord> records);

    const OperatorRecord* find(std::string_view name) const;
    OperatorRecord* find(std::string_view name);
    const OperatorRecord& at(std::string_view name) const;
    OperatorRecord& at(std::string_view name);

    const std::vector<OperatorRecord>& records() const { return records_; }
    std::vector<std::string> names() const;
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    bool operator==(const OperatorTable& other) const { return records_ == other.records_; }

  private:
    std::vector<OperatorRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct TestCase {
    std::uint64_t id = 0;
    std::string source;
    std::vector<std::string> selected_ops;
    LoopMode origin = LoopMode::Default;

    bool operator==(const TestCase&) const = default;
};

struct FeedbackPayload {
    FeedbackKind kind = FeedbackKind::Coverage;
    std::string body;
    std::uint64_t delta_cov = 0;

    bool operator==(const FeedbackPayload&) const = default;
};

void to_json(Json& j, const OperatorRecord& r);
void from_json(const Json& j, OperatorRecord& r);
void to_json(Json& j, const TestCase& t);
void from_json(const Json& j, TestCase& t);
void to_json(Json& j, const FeedbackPayload& f);
void from_json(const Json& j, FeedbackPayload& f);

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

} // namespace dlfuzz
