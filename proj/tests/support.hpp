#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dlfuzz/core/types.hpp"

namespace dlfuzz::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "dlfuzz-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

  private:
    fs::path path_;
};

inline fs::path source_path(const std::string& rel) { return fs::path(DLFUZZ_SOURCE_DIR) / rel; }
inline std::string shim_binary() { return DLFUZZ_SHIM_BIN; }
inline std::string cli_binary() { return DLFUZZ_CLI_BIN; }

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

/// Operator records named op0..op{n-1} with zeroed counters.
inline std::vector<OperatorRecord> numbered_ops(std::size_t n) {
    std::vector<OperatorRecord> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(OperatorRecord{"op" + std::to_string(i), std::nullopt, 0, 0, 0});
    return out;
}

inline std::vector<std::string> numbered_names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("op" + std::to_string(i));
    return out;
}

} // namespace dlfuzz::testing
