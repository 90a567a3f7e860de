#include "dlfuzz/loop/loop.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "dlfuzz/llm/parse.hpp"
#include "dlfuzz/oracle/bug_report.hpp"

namespace dlfuzz {

LoopMode next_mode(LoopMode prev_mode, IterationKind prev_kind, std::uint64_t iteration,
                   std::uint32_t repair_streak, std::uint32_t repair_window) {
    if (iteration == 0) return LoopMode::Default;
    switch (prev_kind) {
    case IterationKind::Failure: return LoopMode::Default;
    case IterationKind::Invalid:
        if (prev_mode != LoopMode::Repair) return repair_window > 0 ? LoopMode::Repair : LoopMode::Default;
        return repair_streak < repair_window ? LoopMode::Repair : LoopMode::Default;
    case IterationKind::Pass:
    case IterationKind::Bug: break;
    }
    return LoopMode::FeedbackGuided;
}

namespace {

std::seed_seq derived_seq(std::uint64_t seed, std::uint64_t iteration, std::uint32_t stream) {
    return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32), stream};
}

} // namespace

Rng iteration_rng(std::uint64_t campaign_seed, std::uint64_t iteration) {
    auto seq = derived_seq(campaign_seed, iteration, 1);
    return Rng(seq);
}

std::uint64_t execution_seed(std::uint64_t campaign_seed, std::uint64_t iteration) {
    auto seq = derived_seq(campaign_seed, iteration, 2);
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (std::uint64_t{words[0]} << 32) | words[1];
}

CampaignSummary summarize(const CampaignState& state) {
    const auto& t = state.tallies;
    CampaignSummary s;
    s.iterations = state.iteration;
    s.failures = t.failure;
    s.executed = s.iterations - t.failure;
    s.valid = t.pass + t.bug_numerical + t.bug_behavioral;
    s.validity_rate = s.executed == 0 ? 0.0 : static_cast<double>(s.valid) / static_cast<double>(s.executed);
    s.unique_numerical = t.unique_numerical;
    s.unique_behavioral = t.unique_behavioral;
    s.unique_bugs = t.unique_numerical + t.unique_behavioral;
    s.bug_outcomes = t.bug_numerical + t.bug_behavioral;
    s.invalid = t.invalid;
    s.coverage = state.cumulative_cov.size();
    s.repairs_attempted = t.repairs_attempted;
    s.repairs_succeeded = t.repairs_succeeded;
    return s;
}

Json to_json(const CampaignSummary& s) {
    return Json{{"iterations", s.iterations},
                {"executed", s.executed},
                {"valid", s.valid},
                {"validity_rate", s.validity_rate},
                {"unique_bugs", s.unique_bugs},
                {"unique_numerical", s.unique_numerical},
                {"unique_behavioral", s.unique_behavioral},
                {"bug_outcomes", s.bug_outcomes},
                {"invalid", s.invalid},
                {"failures", s.failures},
                {"coverage", s.coverage},
                {"repairs_attempted", s.repairs_attempted},
                {"repairs_succeeded", s.repairs_succeeded}};
}

std::string format_table(const CampaignSummary& s) {
    char rate[32];
    std::snprintf(rate, sizeof rate, "%.1f%%", 100.0 * s.validity_rate);
    std::ostringstream out;
    out << "# Bugs             " << s.unique_bugs << " (numerical " << s.unique_numerical << ", behavioral "
        << s.unique_behavioral << ")\n"
        << "Coverage           " << s.coverage << "\n"
        << "# Valid Tests (%)  " << s.valid << " (" << rate << ")\n"
        << "# Tests            " << s.executed << " (" << s.failures << " failed iterations)\n"
        << "Repairs            " << s.repairs_succeeded << "/" << s.repairs_attempted << "\n";
    return out.str();
}

Campaign::Campaign(LoopSettings settings, LoopDeps deps, CampaignState state)
    : settings_(std::move(settings)), deps_(std::move(deps)), state_(std::move(state)),
      op_names_(state_.op_table.names()) {
    if (!deps_.clock) {
        deps_.clock = [] {
            using namespace std::chrono;
            return duration<double>(steady_clock::now().time_since_epoch()).count();
        };
    }
}

std::string Campaign::ask(ChatBackend& backend, AgentRole role, LoopMode mode, Prompt prompt,
                          IterationRecord& record) {
    ChatRequest req;
    req.role = role;
    req.iteration = record.id;
    req.mode = mode;
    req.messages = std::move(prompt);
    if (role == AgentRole::Analysis) {
        req.temperature = settings_.analysis_temperature;
        req.max_tokens = settings_.analysis_max_tokens;
    } else {
        req.temperature = settings_.generation_temperature;
        req.max_tokens = settings_.generation_max_tokens;
    }
    ChatExchange ex;
    ex.role = role;
    ex.prompt = req.messages;
    ex.temperature = req.temperature;
    ex.max_tokens = req.max_tokens;
    ex.backend_id = backend.id();
    ex.response = backend.complete(req);
    record.exchanges.push_back(ex);
    return ex.response;
}

IterationRecord Campaign::run_iteration() {
    const double started = deps_.clock();
    const auto& prev = state_.previous;

    IterationRecord record;
    record.id = state_.iteration;
    record.mode = prev ? next_mode(prev->mode, prev->kind, record.id, prev->repair_streak, settings_.repair_window)
                       : LoopMode::Default;

    // Selection runs on a copy; the charge is stored in the record and folded by the store.
    Rng rng = iteration_rng(state_.rng_seed, record.id);
    SelectionRequest sel;
    sel.repair_pending = record.mode == LoopMode::Repair;
    if (prev) {
        sel.last_ops = prev->ops;
        sel.delta_cov = prev->delta_cov;
        sel.exception_occurred = prev->kind == IterationKind::Invalid;
    }
    OperatorTable scratch = state_.op_table;
    record.selected_ops = ops_selection(sel, op_names_, scratch, settings_.sa, rng);
    if (!sel.repair_pending && !sel.last_ops.empty())
        record.charge = StatCharge{sel.last_ops, sel.delta_cov, sel.exception_occurred};

    try {
        Prompt generation_prompt;
        if (record.mode == LoopMode::Default) {
            generation_prompt = build_default_prompt(deps_.profile, record.selected_ops);
        } else {
            const auto analysis = ask(deps_.analysis, AgentRole::Analysis, record.mode,
                                      build_analysis_prompt(deps_.profile, *prev->test, prev->feedback,
                                                            settings_.prompts),
                                      record);
            record.summary = parse_summary(analysis);
            generation_prompt = build_feedback_prompt(deps_.profile, *prev->test, *record.summary,
                                                      record.selected_ops, prev->feedback.kind);
        }
        const auto generated =
            ask(deps_.generation, AgentRole::Generation, record.mode, std::move(generation_prompt), record);
        record.test = TestCase{record.id, parse_code(generated, deps_.profile), record.selected_ops, record.mode};

        ExecRequest req;
        req.test_id = record.id;
        req.source = record.test->source;
        req.timeout_s = settings_.exec_timeout_s;
        req.want_coverage = true;
        req.seed = execution_seed(state_.rng_seed, record.id);
        auto resp = deps_.executor.execute(req);
        validate_response(req, resp);
        if (resp.shim_fault) throw ExecutionError("shim fault: " + *resp.shim_fault);
        record.eager = resp.result(Backend::Eager);
        record.compiled = resp.result(Backend::Compiled);

        auto outcome = classify(*record.eager, *record.compiled, settings_.tolerance);
        if (outcome.classification == Classification::Pass) {
            record.covered = resp.covered.value_or(CoverageSet{});
            record.delta_cov = coverage_delta(record.covered, state_.cumulative_cov);
            const auto fresh = newly_covered(record.covered, state_.cumulative_cov);
            outcome.feedback.delta_cov = record.delta_cov;
            outcome.feedback.body = render_coverage_body(
                fresh, state_.cumulative_cov.size() + record.delta_cov, settings_.coverage_list_cap);
        }
        if (is_bug(outcome.classification)) {
            outcome.signature = bug_signature(outcome, *record.eager, *record.compiled, *record.test);
            record.new_bug = !state_.bug_signatures.contains(*outcome.signature);
            if (record.new_bug) {
                const auto repro = settings_.repro_prefix + " --workdir " +
                                   std::filesystem::absolute(deps_.store.dir()).string() + " --id " +
                                   std::to_string(record.id);
                deps_.store.write_bug_report(
                    *outcome.signature, make_bug_report(*record.test, *record.eager, *record.compiled, outcome, repro));
            }
        }
        record.feedback = outcome.feedback;
        record.outcome = std::move(outcome);
    } catch (const ShimError&) {
        throw;
    } catch (const StorageError&) {
        throw;
    } catch (const LlmBackendError& e) {
        record.failure = std::string("llm: ") + e.what();
    } catch (const AnalysisParseError& e) {
        record.failure = std::string("analysis parse: ") + e.what();
    } catch (const GenerationParseError& e) {
        record.failure = std::string("generation parse: ") + e.what();
    } catch (const ExecutionError& e) {
        record.failure = std::string("execution: ") + e.what();
    }
    if (record.failure) {
        record.outcome.reset();
        record.covered = CoverageSet{};
        record.delta_cov = 0;
        record.new_bug = false;
        record.feedback = FeedbackPayload{FeedbackKind::ExceptionLog, *record.failure, 0};
    }

    record.wall_time_s = deps_.clock() - started;
    deps_.store.persist_iteration(state_, record);
    return record;
}

bool Campaign::budget_reached() const {
    if (settings_.iteration_budget && state_.iteration >= *settings_.iteration_budget) return true;
    if (settings_.hours_budget && state_.elapsed_s >= *settings_.hours_budget * 3600.0) return true;
    return false;
}

CampaignSummary Campaign::run() {
    while (!budget_reached()) run_iteration();
    deps_.store.write_snapshot(state_);
    return summarize(state_);
}

ReplayResult replay_record(const IterationRecord& record, Executor& executor, const ToleranceConfig& tolerance,
                           std::uint64_t campaign_seed, double exec_timeout_s) {
    if (!record.test || !record.outcome)
        throw std::invalid_argument("record " + std::to_string(record.id) + " has no executed test");
    ExecRequest req;
    req.test_id = record.id;
    req.source = record.test->source;
    req.timeout_s = exec_timeout_s;
    req.want_coverage = false;
    req.seed = execution_seed(campaign_seed, record.id);
    auto resp = executor.execute(req);
    validate_response(req, resp);
    if (resp.shim_fault) throw ExecutionError("shim fault: " + *resp.shim_fault);
    const auto& eager = resp.result(Backend::Eager);
    const auto& compiled = resp.result(Backend::Compiled);
    auto outcome = classify(eager, compiled, tolerance);
    if (is_bug(outcome.classification)) outcome.signature = bug_signature(outcome, eager, compiled, *record.test);
    return ReplayResult{record.outcome->classification, outcome.classification, std::move(outcome)};
}

} // namespace dlfuzz
