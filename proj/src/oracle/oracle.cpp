#include "dlfuzz/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dlfuzz {

void to_json(Json& j, const ToleranceConfig& t) {
    j = Json{{"atol", t.atol}, {"rtol", t.rtol}, {"equal_nan", t.equal_nan}};
}

void from_json(const Json& j, ToleranceConfig& t) {
    t.atol = j.value("atol", 1e-3);
    t.rtol = j.value("rtol", 1e-3);
    t.equal_nan = j.value("equal_nan", true);
}

bool element_close(double eager, double compiled, const ToleranceConfig& tol) {
    if (std::isnan(eager) || std::isnan(compiled)) return tol.equal_nan && std::isnan(eager) && std::isnan(compiled);
    if (eager == compiled) return true;
    if (!std::isfinite(eager) || !std::isfinite(compiled)) return false;
    return std::abs(eager - compiled) <= tol.atol + tol.rtol * std::abs(compiled);
}

namespace {

Consistency mismatch(std::string reason) {
    Consistency c;
    c.consistent = false;
    c.structure_mismatch = true;
    c.reason = std::move(reason);
    return c;
}

std::string shape_str(const TensorValue& t) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < t.shape.size(); ++i) os << (i ? "," : "") << t.shape[i];
    os << ']';
    return os.str();
}

std::string describe_exception(const BackendResult& r) {
    std::ostringstream os;
    os << to_string(r.backend) << ": ";
    if (r.status == BackendStatus::Timeout) {
        os << "timed out\n";
        return os.str();
    }
    if (!r.exception) {
        os << "ok\n";
        return os.str();
    }
    os << r.exception->type << ": " << r.exception->message << '\n';
    for (const auto& f : r.exception->frames) os << "  at " << f << '\n';
    return os.str();
}

bool failed(const BackendResult& r) { return r.status != BackendStatus::Ok; }

} // namespace

Consistency elementwise_consistent(const TensorValue& eager, const TensorValue& compiled,
                                   const ToleranceConfig& tol) {
    if (eager.shape != compiled.shape)
        return mismatch("shape mismatch: eager " + shape_str(eager) + " vs compiled " + shape_str(compiled));
    if (eager.dtype != compiled.dtype)
        return mismatch("dtype mismatch: eager " + eager.dtype + " vs compiled " + compiled.dtype);
    if (eager.digest || compiled.digest) {
        if (eager.digest && compiled.digest && eager.digest->digest == compiled.digest->digest) return {};
        Consistency c;
        c.consistent = false;
        c.reason = "content digest mismatch";
        return c;
    }
    if (eager.data.size() != compiled.data.size()) return mismatch("element count mismatch");

    for (std::size_t i = 0; i < eager.data.size(); ++i) {
        if (!element_close(eager.data[i], compiled.data[i], tol)) {
            Consistency c;
            c.consistent = false;
            c.first_violation = Violation{i, eager.data[i], compiled.data[i]};
            std::ostringstream os;
            os.precision(17);
            os << "element " << i << ": eager " << eager.data[i] << " vs compiled " << compiled.data[i]
               << " exceeds atol=" << tol.atol << " rtol=" << tol.rtol;
            c.reason = os.str();
            return c;
        }
    }
    return {};
}

std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::Pass: return "pass";
    case Classification::BugNumerical: return "bug_numerical";
    case Classification::BugBehavioral: return "bug_behavioral";
    case Classification::Invalid: return "invalid";
    }
    return "?";
}

Classification classification_from_string(std::string_view s) {
    for (auto c : {Classification::Pass, Classification::BugNumerical, Classification::BugBehavioral,
                   Classification::Invalid}) {
        if (to_string(c) == s) return c;
    }
    throw std::invalid_argument("unknown classification: " + std::string(s));
}

IterationKind iteration_kind(Classification c) {
    switch (c) {
    case Classification::Pass: return IterationKind::Pass;
    case Classification::BugNumerical:
    case Classification::BugBehavioral: return IterationKind::Bug;
    case Classification::Invalid: return IterationKind::Invalid;
    }
    return IterationKind::Failure;
}

bool is_bug(Classification c) {
    return c == Classification::BugNumerical || c == Classification::BugBehavioral;
}

void to_json(Json& j, const Outcome& o) {
    j = Json{{"classification", to_string(o.classification)},
             {"feedback", o.feedback},
             {"structure_mismatch", o.structure_mismatch},
             {"reason", o.reason}};
    if (o.signature) j["signature"] = *o.signature;
    if (o.first_violation) {
        j["first_violation"] = Json{{"index", o.first_violation->index},
                                    {"eager", encode_number(o.first_violation->eager)},
                                    {"compiled", encode_number(o.first_violation->compiled)}};
    }
}

void from_json(const Json& j, Outcome& o) {
    o.classification = classification_from_string(j.at("classification").get<std::string>());
    o.feedback = j.at("feedback").get<FeedbackPayload>();
    o.structure_mismatch = j.value("structure_mismatch", false);
    o.reason = j.value("reason", std::string{});
    o.signature.reset();
    o.first_violation.reset();
    if (auto it = j.find("signature"); it != j.end()) o.signature = it->get<std::string>();
    if (auto it = j.find("first_violation"); it != j.end()) {
        o.first_violation = Violation{it->at("index").get<std::uint64_t>(), decode_number(it->at("eager")),
                                      decode_number(it->at("compiled"))};
    }
}

Outcome classify(const BackendResult& eager, const BackendResult& compiled, const ToleranceConfig& tol) {
    Outcome out;

    if (failed(eager) && failed(compiled)) {
        out.classification = Classification::Invalid;
        out.reason = "both backends failed";
        out.feedback.kind = FeedbackKind::ExceptionLog;
        out.feedback.body = describe_exception(eager) + describe_exception(compiled);
        return out;
    }

    if (failed(eager) != failed(compiled)) {
        const auto& bad = failed(eager) ? eager : compiled;
        out.classification = Classification::BugBehavioral;
        out.reason = std::string("only the ") + std::string(to_string(bad.backend)) + " backend failed";
        out.feedback.kind = FeedbackKind::BugReport;
        out.feedback.body = "Behavior inconsistency: " + out.reason + ".\n" + describe_exception(bad);
        return out;
    }

    auto numerical = [&](std::string reason, bool structural, std::optional<Violation> v) {
        out.classification = Classification::BugNumerical;
        out.structure_mismatch = structural;
        out.first_violation = v;
        out.reason = std::move(reason);
        out.feedback.kind = FeedbackKind::BugReport;
        out.feedback.body = "Numerical inconsistency between eager and compiled outputs: " + out.reason + "\n";
        return out;
    };

    if (eager.outputs.size() != compiled.outputs.size()) {
        return numerical("output count mismatch: eager " + std::to_string(eager.outputs.size()) + " vs compiled " +
                             std::to_string(compiled.outputs.size()),
                         true, std::nullopt);
    }
    for (std::size_t i = 0; i < eager.outputs.size(); ++i) {
        auto c = elementwise_consistent(eager.outputs[i], compiled.outputs[i], tol);
        if (!c) return numerical("output " + std::to_string(i) + ": " + c.reason, c.structure_mismatch, c.first_violation);
    }

    out.classification = Classification::Pass;
    out.feedback.kind = FeedbackKind::Coverage;
    return out;
}

std::string bug_signature(const Outcome& outcome, const BackendResult& eager, const BackendResult& compiled,
                          const TestCase& test) {
    constexpr char kSep = '\x1f';
    std::string key;
    if (outcome.classification == Classification::BugBehavioral) {
        const auto& bad = eager.status != BackendStatus::Ok ? eager : compiled;
        std::string type = bad.status == BackendStatus::Timeout ? "Timeout" : "";
        std::string frame;
        if (bad.exception) {
            type = bad.exception->type;
            if (!bad.exception->frames.empty()) frame = bad.exception->frames.front();
        }
        key = std::string("behavioral") + kSep + std::string(to_string(bad.backend)) + kSep + type + kSep + frame;
        return "beh-" + to_hex(fnv1a64(key));
    }
    if (outcome.classification == Classification::BugNumerical) {
        auto ops = test.selected_ops;
        std::sort(ops.begin(), ops.end());
        key = "numerical";
        for (const auto& op : ops) key += kSep + op;
        key += kSep;
        key += outcome.structure_mismatch ? "structure" : "values";
        return "num-" + to_hex(fnv1a64(key));
    }
    throw std::invalid_argument("bug_signature requires a bug outcome");
}

} // namespace dlfuzz
