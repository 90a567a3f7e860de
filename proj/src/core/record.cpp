#include "dlfuzz/core/record.hpp"

namespace dlfuzz {

IterationKind IterationRecord::kind() const {
    if (failure || !outcome) return IterationKind::Failure;
    return iteration_kind(outcome->classification);
}

void to_json(Json& j, const StatCharge& c) {
    j = Json{{"ops", c.ops}, {"delta_cov", c.delta_cov}, {"exception", c.exception}};
}

void from_json(const Json& j, StatCharge& c) {
    c.ops = j.at("ops").get<std::vector<std::string>>();
    c.delta_cov = j.at("delta_cov").get<std::uint64_t>();
    c.exception = j.at("exception").get<bool>();
}

namespace {

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <typename T>
void get_optional(const Json& j, const char* key, std::optional<T>& v) {
    v.reset();
    if (auto it = j.find(key); it != j.end() && !it->is_null()) v = it->get<T>();
}

} // namespace

void to_json(Json& j, const IterationRecord& r) {
    j = Json{{"id", r.id},
             {"mode", to_string(r.mode)},
             {"kind", to_string(r.kind())},
             {"selected_ops", r.selected_ops},
             {"exchanges", r.exchanges},
             {"feedback", r.feedback},
             {"covered", r.covered.lines()},
             {"delta_cov", r.delta_cov},
             {"new_bug", r.new_bug},
             {"wall_time_s", r.wall_time_s}};
    put_optional(j, "charge", r.charge);
    put_optional(j, "summary", r.summary);
    put_optional(j, "test", r.test);
    put_optional(j, "eager", r.eager);
    put_optional(j, "compiled", r.compiled);
    put_optional(j, "outcome", r.outcome);
    put_optional(j, "failure", r.failure);
}

void from_json(const Json& j, IterationRecord& r) {
    r.id = j.at("id").get<std::uint64_t>();
    r.mode = loop_mode_from_string(j.at("mode").get<std::string>());
    r.selected_ops = j.at("selected_ops").get<std::vector<std::string>>();
    r.exchanges = j.at("exchanges").get<std::vector<ChatExchange>>();
    r.feedback = j.at("feedback").get<FeedbackPayload>();
    auto lines = j.at("covered").get<std::vector<std::string>>();
    r.covered = CoverageSet(lines.begin(), lines.end());
    r.delta_cov = j.at("delta_cov").get<std::uint64_t>();
    r.new_bug = j.at("new_bug").get<bool>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    get_optional(j, "charge", r.charge);
    get_optional(j, "summary", r.summary);
    get_optional(j, "test", r.test);
    get_optional(j, "eager", r.eager);
    get_optional(j, "compiled", r.compiled);
    get_optional(j, "outcome", r.outcome);
    get_optional(j, "failure", r.failure);
    if (auto it = j.find("kind"); it != j.end() && iteration_kind_from_string(it->get<std::string>()) != r.kind())
        throw std::invalid_argument("record kind field disagrees with its contents");
}

} // namespace dlfuzz
