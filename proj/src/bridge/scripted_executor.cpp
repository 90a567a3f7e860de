#include <cmath>
#include <limits>
#include <sstream>

#include "dlfuzz/bridge/executor.hpp"

namespace dlfuzz {

namespace {

std::vector<std::string> split_ws(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

double parse_value(const std::string& tok) {
    if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("bad value " + tok);
    return v;
}

ScriptedBehavior parse_behavior(std::string_view spec) {
    auto toks = split_ws(spec);
    ScriptedBehavior b;
    if (toks.empty()) return b;
    const auto& verb = toks[0];
    if (verb == "ok") {
        for (std::size_t i = 1; i < toks.size(); ++i) {
            if (toks[i].rfind("dtype=", 0) == 0) {
                b.dtype = toks[i].substr(6);
                continue;
            }
            std::stringstream ss(toks[i]);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) b.values.push_back(parse_value(item));
            }
        }
    } else if (verb == "raise") {
        b.kind = ScriptedBehavior::Kind::Raise;
        b.exception.type = toks.size() > 1 ? toks[1] : "RuntimeError";
        std::string message;
        for (std::size_t i = 2; i < toks.size(); ++i) {
            if (toks[i].rfind("at=", 0) == 0) {
                b.exception.frames.push_back(toks[i].substr(3));
                continue;
            }
            if (!message.empty()) message += ' ';
            message += toks[i];
        }
        b.exception.message = message;
    } else if (verb == "timeout") {
        b.kind = ScriptedBehavior::Kind::Timeout;
    } else if (verb == "sleep") {
        b.kind = ScriptedBehavior::Kind::Sleep;
    } else if (verb == "hang") {
        b.kind = ScriptedBehavior::Kind::Hang;
    } else {
        throw std::invalid_argument("unknown scripted behavior: " + verb);
    }
    return b;
}

/// Text after "@name:" on `line`, if present.
std::optional<std::string_view> directive(std::string_view line, std::string_view name) {
    std::string tag = "@" + std::string(name) + ":";
    auto p = line.find(tag);
    if (p == std::string_view::npos) return std::nullopt;
    return line.substr(p + tag.size());
}

bool is_directive_line(std::string_view line) {
    for (auto name : {"eager", "compiled", "both", "cover"}) {
        if (directive(line, name)) return true;
    }
    return false;
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        f(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

} // namespace

ScriptedProgram parse_scripted_program(std::string_view source) {
    ScriptedProgram prog;
    for_each_line(source, [&](std::string_view line) {
        if (auto d = directive(line, "both")) {
            prog.eager = prog.compiled = parse_behavior(*d);
        } else if (auto d = directive(line, "eager")) {
            prog.eager = parse_behavior(*d);
        } else if (auto d = directive(line, "compiled")) {
            prog.compiled = parse_behavior(*d);
        } else if (auto d = directive(line, "cover")) {
            prog.explicit_coverage = true;
            for (auto& id : split_ws(*d)) prog.coverage.insert(std::move(id));
        }
    });
    if (!prog.explicit_coverage) prog.coverage = derived_coverage(source);
    return prog;
}

std::vector<double> derived_outputs(std::string_view source, std::uint64_t seed) {
    std::uint64_t h = fnv1a64(source, 0xcbf29ce484222325ULL ^ seed);
    std::vector<double> out;
    for (int i = 0; i < 4; ++i) {
        h = fnv1a64(std::to_string(i), h);
        out.push_back(static_cast<double>(h % 20001) / 10000.0 - 1.0);
    }
    return out;
}

CoverageSet derived_coverage(std::string_view source) {
    CoverageSet cov;
    for_each_line(source, [&](std::string_view line) {
        if (line.find_first_not_of(" \t\r") == std::string_view::npos || is_directive_line(line)) return;
        cov.insert("scripted/exec.py:" + std::to_string(1 + fnv1a64(line) % 4096));
    });
    return cov;
}

BackendResult run_scripted_backend(const ScriptedBehavior& behavior, Backend backend, std::string_view source,
                                   std::uint64_t seed) {
    switch (behavior.kind) {
    case ScriptedBehavior::Kind::Ok: {
        auto values = behavior.values.empty() ? derived_outputs(source, seed) : behavior.values;
        return BackendResult::ok(backend, {compact_tensor(TensorValue::vector(std::move(values), behavior.dtype))});
    }
    case ScriptedBehavior::Kind::Raise: return BackendResult::raised(backend, behavior.exception);
    case ScriptedBehavior::Kind::Timeout:
    case ScriptedBehavior::Kind::Sleep:
    case ScriptedBehavior::Kind::Hang: return BackendResult::timeout(backend);
    }
    return BackendResult::timeout(backend);
}

ExecResponse ScriptedExecutor::execute(const ExecRequest& req) {
    ScriptedProgram prog;
    try {
        prog = parse_scripted_program(req.source);
    } catch (const std::exception& e) {
        throw ExecutionError(std::string("scripted program: ") + e.what());
    }
    ExecResponse resp;
    resp.test_id = req.test_id;
    bool any_ok = false;
    for (auto b : req.backends) {
        const auto& behavior = b == Backend::Eager ? prog.eager : prog.compiled;
        resp.results.push_back(run_scripted_backend(behavior, b, req.source, req.seed));
        any_ok = any_ok || resp.results.back().status == BackendStatus::Ok;
    }
    if (req.want_coverage && any_ok) resp.covered = prog.coverage;
    return resp;
}

} // namespace dlfuzz
