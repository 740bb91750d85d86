#pragma once

#include <Eigen/Dense>

#include <vector>

#include "net2milp/milp.hpp"

namespace net2milp {

struct LpRow {
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

/// min cᵀx  s.t. rows, lb ≤ x ≤ ub. Lower bounds must be finite (every
/// model this artifact builds has them); upper bounds may be +inf.
struct LpProblem {
  Eigen::VectorXd cost;
  std::vector<LpRow> rows;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  Eigen::Index var_count() const { return cost.size(); }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

struct LpResult {
  LpStatus status = LpStatus::kNumericalFailure;
  Eigen::VectorXd point;
  double objective = 0.0;
  int iterations = 0;
};

/// Two-phase primal simplex on a dense tableau. Feasibility tolerance
/// 1e-7, pivot tolerance 1e-9; Bland's rule engages after
/// 5·(rows+cols) iterations so the method always terminates. A stalled
/// pivot is reported as numerical failure, never as a wrong optimum.
LpResult simplex_solve(const LpProblem& lp);

/// LP relaxation of a model: indicators lowered via big-M, binaries
/// relaxed to [0,1] (tighter per-variable bounds are kept).
LpProblem lp_relaxation_of(const MilpModel& model);

constexpr double kSimplexFeasTol = 1e-7;
constexpr double kPivotTol = 1e-9;

}  // namespace net2milp
