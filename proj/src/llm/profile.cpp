#include "dlfuzz/llm/profile.hpp"

#include <fstream>
#include <sstream>

namespace dlfuzz {

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void SutProfile::validate() const {
    if (name.empty()) throw std::invalid_argument("profile name is empty");
    if (few_shot_examples.empty()) throw std::invalid_argument("profile " + name + " has no few-shot examples");
    if (code_markers.empty()) throw std::invalid_argument("profile " + name + " has no code markers");
    for (const auto& ex : few_shot_examples) {
        if (ex.source.empty() || ex.selected_ops.empty())
            throw std::invalid_argument("profile " + name + " has an incomplete few-shot example");
    }
}

void to_json(Json& j, const FewShotExample& e) {
    j = Json{{"selected_ops", e.selected_ops}, {"instruction", e.instruction}, {"source", e.source}};
}

void from_json(const Json& j, FewShotExample& e) {
    e.selected_ops = j.at("selected_ops").get<std::vector<std::string>>();
    e.instruction = j.value("instruction", std::string{});
    e.source = j.value("source", std::string{});
}

void to_json(Json& j, const AnalysisExample& e) {
    j = Json{{"kind", to_string(e.kind)}, {"program", e.program}, {"feedback", e.feedback}, {"summary", e.summary}};
}

void from_json(const Json& j, AnalysisExample& e) {
    e.kind = feedback_kind_from_string(j.at("kind").get<std::string>());
    e.program = j.value("program", std::string{});
    e.feedback = j.at("feedback").get<std::string>();
    e.summary = j.at("summary").get<std::string>();
}

void to_json(Json& j, const SutProfile& p) {
    j = Json{{"name", p.name},
             {"library_token", p.library_token},
             {"code_language", p.code_language},
             {"few_shot_examples", p.few_shot_examples},
             {"analysis_examples", p.analysis_examples},
             {"code_markers", p.code_markers},
             {"backend_labels", {{"eager", p.eager_label}, {"compiled", p.compiled_label}}}};
}

void from_json(const Json& j, SutProfile& p) {
    p.name = j.at("name").get<std::string>();
    p.library_token = j.at("library_token").get<std::string>();
    p.code_language = j.value("code_language", std::string("python"));
    p.few_shot_examples = j.value("few_shot_examples", std::vector<FewShotExample>{});
    p.analysis_examples = j.value("analysis_examples", std::vector<AnalysisExample>{});
    p.code_markers = j.at("code_markers").get<std::vector<std::string>>();
    if (auto it = j.find("backend_labels"); it != j.end()) {
        p.eager_label = it->value("eager", std::string("eager"));
        p.compiled_label = it->value("compiled", std::string("compiled"));
    }
}

SutProfile load_profile(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(slurp(path));
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument("profile " + path.string() + ": " + e.what());
    }
    const auto dir = path.parent_path();
    if (auto it = j.find("few_shot_examples"); it != j.end()) {
        for (auto& ex : *it) {
            if (auto f = ex.find("source_file"); f != ex.end()) {
                ex["source"] = slurp(dir / f->get<std::string>());
                ex.erase("source_file");
            }
        }
    }
    if (auto it = j.find("analysis_examples"); it != j.end()) {
        for (auto& ex : *it) {
            if (auto f = ex.find("program_file"); f != ex.end()) {
                ex["program"] = slurp(dir / f->get<std::string>());
                ex.erase("program_file");
            }
        }
    }
    SutProfile p = j.get<SutProfile>();
    p.validate();
    return p;
}

} // namespace dlfuzz
