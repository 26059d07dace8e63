#pragma once

#include <string>
#include <vector>

namespace pdl::testing {

struct ExpectedBinding {
  std::string name;
  std::string value_json;
  std::string contribution;
};

/// One inference rule: a program exercising it and the triple computed by
/// hand from the rule. "context" is the initial context string.
struct ConformanceCase {
  std::string rule;
  std::string source;
  std::string context;
  std::string value_json;  // "<function>" for closures
  std::string contribution;
  std::vector<ExpectedBinding> bindings;
  std::vector<std::string> unbound;
};

struct ConformanceResult {
  std::string rule;
  bool pass = false;
  std::string detail;
};

const std::vector<ConformanceCase>& conformance_cases();

/// Checks the interpreter against the hand-computed triple and against the
/// reference oracle.
ConformanceResult run_conformance_case(const ConformanceCase& c);

}  // namespace pdl::testing
