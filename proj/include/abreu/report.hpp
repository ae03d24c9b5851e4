#pragma once

#include <string>
#include <vector>

namespace abreu {

// One named audit: what was measured, the bar it was held to, and whether it
// cleared.  Checks that do not apply to the model at hand keep applicable
// false and never fail the report.
struct CheckResult {
  std::string name;
  bool passed = false;
  bool applicable = true;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const CheckResult& c : checks)
      if (c.applicable && !c.passed) return false;
    return true;
  }
};

}  // namespace abreu
