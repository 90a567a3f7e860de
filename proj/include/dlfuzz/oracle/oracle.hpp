#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dlfuzz/core/types.hpp"
#include "dlfuzz/oracle/tensor.hpp"

namespace dlfuzz {

struct ToleranceConfig {
    double atol = 1e-3;
    double rtol = 1e-3;
    bool equal_nan = true;

    bool operator==(const ToleranceConfig&) const = default;
};

void to_json(Json& j, const ToleranceConfig& t);
void from_json(const Json& j, ToleranceConfig& t);

struct Violation {
    std::uint64_t index = 0;
    double eager = 0.0;
    double compiled = 0.0;

    bool operator==(const Violation&) const = default;
};

struct Consistency {
    bool consistent = true;
    bool structure_mismatch = false;
    std::optional<Violation> first_violation;
    std::string reason; // empty when consistent

    explicit operator bool() const { return consistent; }
};

/// True when one element pair satisfies |eager - compiled| <= atol + rtol * |compiled|.
/// Exactly equal values (including equal infinities) always pass; NaN pairs follow
/// `equal_nan`; any other non-finite pair fails.
bool element_close(double eager, double compiled, const ToleranceConfig& tol);

/// Compares one eager output against the matching compiled output. The inequality is
/// not symmetric: `eager` plays the role of "input" and `compiled` of "other".
Consistency elementwise_consistent(const TensorValue& eager, const TensorValue& compiled,
                                   const ToleranceConfig& tol);

enum class Classification { Pass, BugNumerical, BugBehavioral, Invalid };

std::string_view to_string(Classification c);
Classification classification_from_string(std::string_view s);
IterationKind iteration_kind(Classification c);
bool is_bug(Classification c);

struct Outcome {
    Classification classification = Classification::Pass;
    FeedbackPayload feedback;
    std::optional<std::string> signature;
    bool structure_mismatch = false;
    std::optional<Violation> first_violation;
    std::string reason;

    bool operator==(const Outcome&) const = default;
};

void to_json(Json& j, const Outcome& o);
void from_json(const Json& j, Outcome& o);

/// Joint classification of one test's two backend results.
///   both Ok and consistent          -> Pass (coverage feedback, body filled in later)
///   both Ok, any output inconsistent -> BugNumerical
///   exactly one side not Ok          -> BugBehavioral
///   neither side Ok                  -> Invalid
Outcome classify(const BackendResult& eager, const BackendResult& compiled, const ToleranceConfig& tol);

/// Deduplication key for a bug outcome. Behavioral bugs key on the failing side, its
/// exception type and innermost frame; numerical bugs key on the sorted operator set
/// and whether the mismatch was structural.
std::string bug_signature(const Outcome& outcome, const BackendResult& eager, const BackendResult& compiled,
                          const TestCase& test);

} // namespace dlfuzz
