#pragma once

#include <string>

#include "dlfuzz/oracle/oracle.hpp"

namespace dlfuzz {

/// Report for one unique bug: test source, selected operators, both backend results
/// verbatim, classification, first violation or exception trace, and the command that
/// reproduces it.
Json make_bug_report(const TestCase& test, const BackendResult& eager, const BackendResult& compiled,
                     const Outcome& outcome, const std::string& repro_command);

} // namespace dlfuzz
