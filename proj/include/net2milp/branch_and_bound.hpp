#pragma once

#include <vector>

#include "net2milp/milp.hpp"
#include "net2milp/simplex.hpp"

namespace net2milp {

enum class BranchRule { kMostFractional, kFirstFractional };

struct BnbConfig {
  BranchRule branching = BranchRule::kMostFractional;
  long node_limit = 1000000;
  double gap = 1e-6;          // absolute optimality gap
  double time_budget_s = 0.0; // 0 = unlimited
  bool deterministic = true;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kNodeLimit,
  kTimeLimit,
  kNumericalFailure,
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  double objective = kInf;
  std::vector<double> assignment;  // full, by variable id (empty if none)
  long node_count = 0;
  double best_bound = -kInf;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

/// Best-bound-first branch and bound over LP relaxations. Indicators whose
/// guard is fixed contribute their implied row directly (or vanish);
/// unfixed guards contribute big-M rows where the bounds admit a finite M,
/// and are branched on otherwise. Binary values in a returned optimal
/// assignment are snapped to exact 0/1 and re-checked with evaluate.
SolveResult branch_and_bound(const MilpModel& model, const BnbConfig& config = {});

const char* to_string(SolveStatus s);

}  // namespace net2milp
