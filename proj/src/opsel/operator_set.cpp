#include <fstream>
#include <sstream>

#include "dlfuzz/opsel/opsel.hpp"

namespace dlfuzz {

std::vector<OperatorRecord> parse_operator_set(std::string_view text) {
    std::vector<OperatorRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw std::invalid_argument("operator set line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("name") || !j["name"].is_string())
            throw std::invalid_argument("operator set line " + std::to_string(lineno) + ": missing \"name\"");
        OperatorRecord r;
        r.name = j["name"].get<std::string>();
        if (auto it = j.find("signature"); it != j.end() && it->is_string()) r.signature = it->get<std::string>();
        out.push_back(std::move(r));
    }
    // Rejects duplicates and empty names.
    OperatorTable check(out);
    if (out.empty()) throw std::invalid_argument("operator set is empty");
    return out;
}

std::vector<OperatorRecord> load_operator_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open operator set: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_operator_set(ss.str());
}

} // namespace dlfuzz
