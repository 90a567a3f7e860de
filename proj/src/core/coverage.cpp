#include "dlfuzz/core/coverage.hpp"

#include <algorithm>
#include <iterator>

namespace dlfuzz {

std::size_t CoverageSet::merge(const CoverageSet& other) {
    std::size_t before = lines_.size();
    lines_.insert(other.lines_.begin(), other.lines_.end());
    return lines_.size() - before;
}

std::uint64_t coverage_delta(const CoverageSet& current, const CoverageSet& cumulative) {
    std::uint64_t n = 0;
    for (const auto& line : current) {
        if (!cumulative.contains(line)) ++n;
    }
    return n;
}

std::vector<std::string> newly_covered(const CoverageSet& current, const CoverageSet& cumulative) {
    std::vector<std::string> out;
    std::set_difference(current.begin(), current.end(), cumulative.begin(), cumulative.end(),
                        std::back_inserter(out));
    return out;
}

CoverageSet set_union(const CoverageSet& a, const CoverageSet& b) {
    CoverageSet out = a;
    out.merge(b);
    return out;
}

} // namespace dlfuzz
