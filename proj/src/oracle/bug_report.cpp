#include "dlfuzz/oracle/bug_report.hpp"

namespace dlfuzz {

Json make_bug_report(const TestCase& test, const BackendResult& eager, const BackendResult& compiled,
                     const Outcome& outcome, const std::string& repro_command) {
    Json j{{"signature", outcome.signature.value_or("")},
           {"classification", to_string(outcome.classification)},
           {"test_id", test.id},
           {"selected_ops", test.selected_ops},
           {"source", test.source},
           {"eager", eager},
           {"compiled", compiled},
           {"reason", outcome.reason},
           {"reproduce", repro_command}};
    if (outcome.first_violation) {
        j["first_violation"] = Json{{"index", outcome.first_violation->index},
                                    {"eager", encode_number(outcome.first_violation->eager)},
                                    {"compiled", encode_number(outcome.first_violation->compiled)}};
    }
    const auto& failed = eager.status != BackendStatus::Ok ? eager : compiled;
    if (outcome.classification == Classification::BugBehavioral && failed.exception)
        j["exception_trace"] = *failed.exception;
    return j;
}

} // namespace dlfuzz
