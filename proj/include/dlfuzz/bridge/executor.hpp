#pragma once

#include <string>

#include "dlfuzz/bridge/protocol.hpp"

namespace dlfuzz {

/// Runs one test on the requested backends.
class Executor {
  public:
    virtual ~Executor() = default;
    /// Throws ExecutionError for a failure confined to this request and ShimError when
    /// execution cannot continue at all.
    virtual ExecResponse execute(const ExecRequest& req) = 0;
    virtual std::string id() const = 0;
};

/// What a scripted test asks one backend to do.
struct ScriptedBehavior {
    enum class Kind { Ok, Raise, Timeout, Sleep, Hang } kind = Kind::Ok;
    std::vector<double> values; // Ok; empty means "derive from the source"
    std::string dtype = "float32";
    ExceptionInfo exception;    // Raise
};

/// Directives a scripted test carries in its source text, one per line:
///
///   @eager: <behavior>      @compiled: <behavior>      @both: <behavior>
///   @cover: <line-id> [<line-id> ...]
///
/// where <behavior> is one of
///   ok [v1,v2,...] [dtype=<tag>]        values may be nan, inf, -inf
///   raise <Type> [at=<frame>] [message words...]
///   timeout | sleep | hang
struct ScriptedProgram {
    ScriptedBehavior eager;
    ScriptedBehavior compiled;
    bool explicit_coverage = false;
    CoverageSet coverage;
};

ScriptedProgram parse_scripted_program(std::string_view source);

/// Deterministic outputs used when a directive does not pin values.
std::vector<double> derived_outputs(std::string_view source, std::uint64_t seed);

/// Coverage used when the source has no @cover directive: one hashed line id per
/// non-directive source line.
CoverageSet derived_coverage(std::string_view source);

/// In-process executor driven by source directives. Sleep and hang report Timeout
/// immediately. Results are a pure function of (source, seed, request flags).
class ScriptedExecutor final : public Executor {
  public:
    ExecResponse execute(const ExecRequest& req) override;
    std::string id() const override { return "scripted"; }
};

/// Runs one backend of a scripted program in-process (shared by the scripted shim).
BackendResult run_scripted_backend(const ScriptedBehavior& behavior, Backend backend, std::string_view source,
                                   std::uint64_t seed);

} // namespace dlfuzz
