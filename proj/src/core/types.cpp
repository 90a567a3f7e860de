#include "dlfuzz/core/types.hpp"

#include <cstdio>

namespace dlfuzz {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::pair<E, std::string_view> (&table)[N], const char* what) {
    for (const auto& [value, name] : table) {
        if (name == s) return value;
    }
    throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(s));
}

constexpr std::pair<LoopMode, std::string_view> kModes[] = {
    {LoopMode::Default, "default"},
    {LoopMode::FeedbackGuided, "feedback_guided"},
    {LoopMode::Repair, "repair"},
};

constexpr std::pair<IterationKind, std::string_view> kKinds[] = {
    {IterationKind::Pass, "pass"},
    {IterationKind::Bug, "bug"},
    {IterationKind::Invalid, "invalid"},
    {IterationKind::Failure, "failure"},
};

constexpr std::pair<FeedbackKind, std::string_view> kFeedback[] = {
    {FeedbackKind::Coverage, "coverage"},
    {FeedbackKind::BugReport, "bug_report"},
    {FeedbackKind::ExceptionLog, "exception_log"},
};

} // namespace

std::string_view to_string(LoopMode mode) { return kModes[static_cast<int>(mode)].second; }
std::string_view to_string(IterationKind kind) { return kKinds[static_cast<int>(kind)].second; }
std::string_view to_string(FeedbackKind kind) { return kFeedback[static_cast<int>(kind)].second; }

LoopMode loop_mode_from_string(std::string_view s) { return parse_enum(s, kModes, "loop mode"); }
IterationKind iteration_kind_from_string(std::string_view s) { return parse_enum(s, kKinds, "iteration kind"); }
FeedbackKind feedback_kind_from_string(std::string_view s) { return parse_enum(s, kFeedback, "feedback kind"); }

OperatorTable::OperatorTable(std::vector<OperatorRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        auto [it, inserted] = index_.emplace(records_[i].name, i);
        if (!inserted) throw std::invalid_argument("duplicate operator name: " + records_[i].name);
        if (records_[i].name.empty()) throw std::invalid_argument("operator name must be nonempty");
    }
}

const OperatorRecord* OperatorTable::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &records_[it->second];
}

OperatorRecord* OperatorTable::find(std::string_view name) {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &records_[it->second];
}

const OperatorRecord& OperatorTable::at(std::string_view name) const {
    if (const auto* r = find(name)) return *r;
    throw std::out_of_range("operator not in table: " + std::string(name));
}

OperatorRecord& OperatorTable::at(std::string_view name) {
    if (auto* r = find(name)) return *r;
    throw std::out_of_range("operator not in table: " + std::string(name));
}

std::vector<std::string> OperatorTable::names() const {
    std::vector<std::string> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.name);
    return out;
}

void to_json(Json& j, const OperatorRecord& r) {
    j = Json{{"name", r.name},
             {"used_times", r.used_times},
             {"exp_count", r.exp_count},
             {"cov_count", r.cov_count}};
    if (r.signature) j["signature"] = *r.signature;
}

void from_json(const Json& j, OperatorRecord& r) {
    r.name = j.at("name").get<std::string>();
    r.signature.reset();
    if (auto it = j.find("signature"); it != j.end() && !it->is_null()) r.signature = it->get<std::string>();
    r.used_times = j.value("used_times", std::uint64_t{0});
    r.exp_count = j.value("exp_count", std::uint64_t{0});
    r.cov_count = j.value("cov_count", std::uint64_t{0});
}

void to_json(Json& j, const TestCase& t) {
    j = Json{{"id", t.id},
             {"source", t.source},
             {"selected_ops", t.selected_ops},
             {"origin", to_string(t.origin)}};
}

void from_json(const Json& j, TestCase& t) {
    t.id = j.at("id").get<std::uint64_t>();
    t.source = j.at("source").get<std::string>();
    t.selected_ops = j.at("selected_ops").get<std::vector<std::string>>();
    t.origin = loop_mode_from_string(j.at("origin").get<std::string>());
}

void to_json(Json& j, const FeedbackPayload& f) {
    j = Json{{"kind", to_string(f.kind)}, {"body", f.body}, {"delta_cov", f.delta_cov}};
}

void from_json(const Json& j, FeedbackPayload& f) {
    f.kind = feedback_kind_from_string(j.at("kind").get<std::string>());
    f.body = j.at("body").get<std::string>();
    f.delta_cov = j.at("delta_cov").get<std::uint64_t>();
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace dlfuzz
