#pragma once

#include <string>
#include <vector>

#include "geodetect/parallel.hpp"

namespace geodetect {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The closed-form sanity examples: identities, sign cases, empty sums.
std::vector<SelfTestResult> run_selftest(const ExecContext& exec = {});

}  // namespace geodetect
