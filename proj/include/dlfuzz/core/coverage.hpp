#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace dlfuzz {

/// Set of covered source lines, each identified as "relative/file/path:line".
class CoverageSet {
  public:
    using const_iterator = std::set<std::string>::const_iterator;

    CoverageSet() = default;
    CoverageSet(std::initializer_list<std::string> lines) : lines_(lines) {}
    explicit CoverageSet(std::set<std::string> lines) : lines_(std::move(lines)) {}

    template <typename It>
    CoverageSet(It first, It last) : lines_(first, last) {}

    bool insert(std::string line) { return lines_.insert(std::move(line)).second; }
    bool contains(const std::string& line) const { return lines_.contains(line); }
    std::size_t size() const { return lines_.size(); }
    bool empty() const { return lines_.empty(); }

    /// Adds every line of `other`; returns how many were new.
    std::size_t merge(const CoverageSet& other);

    const std::set<std::string>& lines() const { return lines_; }
    const_iterator begin() const { return lines_.begin(); }
    const_iterator end() const { return lines_.end(); }

    bool operator==(const CoverageSet&) const = default;

  private:
    std::set<std::string> lines_;
};

/// |current \ cumulative|.
std::uint64_t coverage_delta(const CoverageSet& current, const CoverageSet& cumulative);

/// current \ cumulative, in sorted order.
std::vector<std::string> newly_covered(const CoverageSet& current, const CoverageSet& cumulative);

CoverageSet set_union(const CoverageSet& a, const CoverageSet& b);

} // namespace dlfuzz
