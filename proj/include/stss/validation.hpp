#pragma once

// Built-in oracle checks run by `stss --mode validate`: each analytic shortcut
// is compared against brute-force time integration on small fixtures.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace stss::validation {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool pass = false;
};

std::vector<CheckResult> run_suite(std::uint64_t seed = 0);

/// One "PASS|FAIL name value <= limit" line per check.
void print_table(std::ostream& os, const std::vector<CheckResult>& results);

}  // namespace stss::validation
