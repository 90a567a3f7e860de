#include "dlfuzz/llm/parse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <vector>

namespace dlfuzz {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

/// Offset of the first "```" that starts a line at or after `from` (leading blanks allowed).
std::optional<std::size_t> find_fence(std::string_view text, std::size_t from) {
    std::size_t line = from;
    while (line < text.size()) {
        std::size_t p = line;
        while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
        if (text.substr(p, 3) == "```") return p;
        auto nl = text.find('\n', line);
        if (nl == std::string_view::npos) break;
        line = nl + 1;
    }
    return std::nullopt;
}

enum class Section { Explanation, Reasons, Strategy };

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

/// Recognizes a heading line; on success returns the section and the text that follows
/// the heading on the same line.
std::optional<std::pair<Section, std::string>> heading(std::string_view line) {
    std::size_t p = 0;
    while (p < line.size() && (line[p] == '#' || line[p] == '*' || line[p] == '-' || line[p] == ' ' ||
                               line[p] == '\t' || line[p] == '_'))
        ++p;
    const std::string rest = lower(line.substr(p));
    static const std::array<std::pair<std::string_view, Section>, 5> names = {{
        {"next testing strategy", Section::Strategy},
        {"next strategy", Section::Strategy},
        {"explanation", Section::Explanation},
        {"reasons", Section::Reasons},
        {"reason", Section::Reasons},
    }};
    for (const auto& [name, section] : names) {
        if (rest.rfind(name, 0) != 0) continue;
        std::size_t q = name.size();
        while (q < rest.size() && (rest[q] == '*' || rest[q] == '_' || rest[q] == ' ')) ++q;
        if (q == rest.size()) return std::pair{section, std::string{}};
        if (rest[q] != ':') return std::nullopt;
        // Keep the original casing of the inline text.
        const std::size_t orig = p + q + 1;
        std::string tail(line.substr(orig));
        auto t = trim(tail);
        while (!t.empty() && (t.front() == '*' || t.front() == '_')) t.erase(t.begin());
        return std::pair{section, trim(t)};
    }
    return std::nullopt;
}

} // namespace

std::string parse_code(std::string_view response, const SutProfile& profile) {
    std::string code;
    if (auto open = find_fence(response, 0)) {
        auto nl = response.find('\n', *open);
        if (nl == std::string_view::npos) {
            code.clear();
        } else {
            const std::size_t start = nl + 1;
            auto close = find_fence(response, start);
            if (!close) {
                code = std::string(response.substr(start));
            } else {
                // Step back to the start of the closing line, then drop its newline.
                std::size_t end = *close;
                while (end > start && (response[end - 1] == ' ' || response[end - 1] == '\t')) --end;
                if (end > start && response[end - 1] == '\n') --end;
                code = std::string(response.substr(start, end - start));
            }
        }
    } else {
        code = trim(response);
    }

    if (trim(code).empty()) throw GenerationParseError("generation response contains no code");
    for (const auto& marker : profile.code_markers) {
        if (code.find(marker) == std::string::npos)
            throw GenerationParseError("generated code lacks required marker \"" + marker + "\"");
    }
    return code;
}

AnalysisSummary parse_summary(std::string_view response) {
    if (trim(response).empty()) throw AnalysisParseError("empty analysis response");

    AnalysisSummary s;
    s.raw = std::string(response);

    std::array<std::optional<std::string>, 3> parts;
    std::optional<Section> current;
    std::size_t pos = 0;
    while (pos <= response.size()) {
        auto nl = response.find('\n', pos);
        auto line = response.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (auto h = heading(line)) {
            current = h->first;
            auto& slot = parts[static_cast<int>(*current)];
            slot = slot ? *slot + "\n" + h->second : h->second;
        } else if (current) {
            auto& slot = parts[static_cast<int>(*current)];
            *slot += "\n";
            *slot += line;
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }

    auto& strategy = parts[static_cast<int>(Section::Strategy)];
    if (!strategy || trim(*strategy).empty()) {
        s.next_strategy = trim(response);
        return s;
    }
    s.next_strategy = trim(*strategy);
    if (auto& e = parts[static_cast<int>(Section::Explanation)]) s.explanation = trim(*e);
    if (auto& r = parts[static_cast<int>(Section::Reasons)]) s.reasons = trim(*r);
    return s;
}

} // namespace dlfuzz
