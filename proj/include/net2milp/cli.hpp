#pragma once

#include <string>
#include <vector>

namespace net2milp {

// exit codes: 0 success, 1 usage error, 2 infeasible/certificate,
// 3 numerical failure
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumerical = 3;

/// Runs one CLI invocation (argv without the program name).
int run_cli(const std::vector<std::string>& args);

}  // namespace net2milp
