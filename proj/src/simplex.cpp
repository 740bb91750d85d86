#include "net2milp/simplex.hpp"

#include <cmath>
#include <stdexcept>

namespace net2milp {

namespace {

// Column roles inside the tableau.
enum class ColKind { kStructural, kSlack, kArtificial };

// Row-major storage: pivoting is row-dominant.
using TableauMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Tableau {
  TableauMatrix t;               // m rows × (cols + 1), last column = rhs
  Eigen::RowVectorXd cost_row;   // reduced costs, same width as t
  std::vector<int> basis;        // basic column per row
  std::vector<ColKind> kind;
  int cols = 0;

  double rhs(int r) const { return t(r, cols); }
};

// entering column: most negative reduced cost (Dantzig) or first
// negative (Bland). Returns -1 if none.
int pick_entering(const Tableau& tb, bool bland) {
  int best = -1;
  double best_val = -kPivotTol;
  for (int j = 0; j < tb.cols; ++j) {
    if (tb.kind[static_cast<std::size_t>(j)] == ColKind::kArtificial) continue;
    const double rc = tb.cost_row(j);
    if (rc < -kPivotTol) {
      if (bland) return j;
      if (rc < best_val) {
        best_val = rc;
        best = j;
      }
    }
  }
  return best;
}

// leaving row by ratio test. Returns -1 when the column is unbounded.
int pick_leaving(const Tableau& tb, int enter, bool bland) {
  int best = -1;
  double best_ratio = 0;
  for (int r = 0; r < tb.t.rows(); ++r) {
    const double a = tb.t(r, enter);
    if (a <= kPivotTol) continue;
    const double ratio = tb.rhs(r) / a;
    if (best < 0 || ratio < best_ratio - 1e-12 ||
        (std::abs(ratio - best_ratio) <= 1e-12 &&
         (bland ? tb.basis[static_cast<std::size_t>(r)] < tb.basis[static_cast<std::size_t>(best)]
                : r < best))) {
      best = r;
      best_ratio = ratio;
    }
  }
  return best;
}

void pivot(Tableau& tb, int row, int col) {
  const double p = tb.t(row, col);
  tb.t.row(row) /= p;
  // row-major rows are contiguous; skipping zero factors pays off while
  // the tableau is still sparse
  for (int r = 0; r < tb.t.rows(); ++r) {
    if (r == row) continue;
    const double f = tb.t(r, col);
    if (f != 0.0) tb.t.row(r) -= f * tb.t.row(row);
  }
  const double cf = tb.cost_row(col);
  if (cf != 0.0) tb.cost_row -= cf * tb.t.row(row);
  tb.basis[static_cast<std::size_t>(row)] = col;
}

enum class PhaseOutcome { kConverged, kUnbounded, kStalled };

PhaseOutcome run_phase(Tableau& tb, int& iterations, int bland_after, int hard_cap) {
  for (;;) {
    const bool bland = iterations >= bland_after;
    const int enter = pick_entering(tb, bland);
    if (enter < 0) return PhaseOutcome::kConverged;
    const int leave = pick_leaving(tb, enter, bland);
    if (leave < 0) {
      // entries in (1e-12, kPivotTol]: too small to pivot on, too large to
      // call the ray genuine
      for (int r = 0; r < tb.t.rows(); ++r)
        if (tb.t(r, enter) > 1e-12) return PhaseOutcome::kStalled;
      return PhaseOutcome::kUnbounded;
    }
    pivot(tb, leave, enter);
    if (++iterations > hard_cap) return PhaseOutcome::kStalled;
  }
}

}  // namespace

LpResult simplex_solve(const LpProblem& lp) {
  const Eigen::Index n = lp.var_count();
  if (lp.lb.size() != n || lp.ub.size() != n)
    throw std::invalid_argument("simplex: bound vectors must match cost length");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(lp.lb(i)))
      throw std::invalid_argument("simplex: variable " + std::to_string(i) +
                                  " has no finite lower bound");
    if (lp.lb(i) > lp.ub(i)) return {LpStatus::kInfeasible, {}, 0.0, 0};
  }

  // Shift to y = x − lb ≥ 0 and turn finite upper bounds into rows.
  struct NormRow {
    std::vector<std::pair<int, double>> terms;
    Sense sense;
    double rhs;
  };
  std::vector<NormRow> rows;
  rows.reserve(lp.rows.size() + static_cast<std::size_t>(n));
  for (const LpRow& r : lp.rows) {
    double shift = 0;
    for (const auto& [id, a] : r.terms) shift += a * lp.lb(id);
    if (!std::isfinite(r.rhs)) throw std::invalid_argument("simplex: non-finite rhs");
    rows.push_back({r.terms, r.sense, r.rhs - shift});
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(lp.ub(i)))
      rows.push_back({{{static_cast<int>(i), 1.0}}, Sense::kLe, lp.ub(i) - lp.lb(i)});

  // Flip rows to non-negative rhs.
  for (NormRow& r : rows)
    if (r.rhs < 0) {
      for (auto& [id, a] : r.terms) a = -a;
      r.rhs = -r.rhs;
      r.sense = r.sense == Sense::kLe ? Sense::kGe : (r.sense == Sense::kGe ? Sense::kLe : Sense::kEq);
    }

  const int m = static_cast<int>(rows.size());
  int slack_count = 0, art_count = 0;
  for (const NormRow& r : rows) {
    if (r.sense != Sense::kEq) ++slack_count;     // slack or surplus
    if (r.sense != Sense::kLe) ++art_count;       // = and ≥ need artificials
  }

  Tableau tb;
  tb.cols = static_cast<int>(n) + slack_count + art_count;
  tb.t = TableauMatrix::Zero(m, tb.cols + 1);
  tb.kind.assign(static_cast<std::size_t>(tb.cols), ColKind::kStructural);
  tb.basis.assign(static_cast<std::size_t>(m), -1);

  int next_slack = static_cast<int>(n);
  int next_art = static_cast<int>(n) + slack_count;
  for (int r = 0; r < m; ++r) {
    for (const auto& [id, a] : rows[static_cast<std::size_t>(r)].terms) tb.t(r, id) += a;
    tb.t(r, tb.cols) = rows[static_cast<std::size_t>(r)].rhs;
    switch (rows[static_cast<std::size_t>(r)].sense) {
      case Sense::kLe:
        tb.t(r, next_slack) = 1.0;
        tb.kind[static_cast<std::size_t>(next_slack)] = ColKind::kSlack;
        tb.basis[static_cast<std::size_t>(r)] = next_slack++;
        break;
      case Sense::kGe:
        tb.t(r, next_slack) = -1.0;
        tb.kind[static_cast<std::size_t>(next_slack)] = ColKind::kSlack;
        ++next_slack;
        tb.t(r, next_art) = 1.0;
        tb.kind[static_cast<std::size_t>(next_art)] = ColKind::kArtificial;
        tb.basis[static_cast<std::size_t>(r)] = next_art++;
        break;
      case Sense::kEq:
        tb.t(r, next_art) = 1.0;
        tb.kind[static_cast<std::size_t>(next_art)] = ColKind::kArtificial;
        tb.basis[static_cast<std::size_t>(r)] = next_art++;
        break;
    }
  }

  const int bland_after = 5 * (m + tb.cols);
  const int hard_cap = 50 * (m + tb.cols) + 10000;
  int iterations = 0;
  LpResult result;

  // Phase 1: minimize Σ artificials.
  if (art_count > 0) {
    tb.cost_row = Eigen::RowVectorXd::Zero(tb.cols + 1);
    for (int j = 0; j < tb.cols; ++j)
      if (tb.kind[static_cast<std::size_t>(j)] == ColKind::kArtificial) tb.cost_row(j) = 1.0;
    // price out the artificial basis
    for (int r = 0; r < m; ++r)
      if (tb.kind[static_cast<std::size_t>(tb.basis[static_cast<std::size_t>(r)])] ==
          ColKind::kArtificial)
        tb.cost_row -= tb.t.row(r);

    const PhaseOutcome out = run_phase(tb, iterations, bland_after, hard_cap);
    // the phase-1 objective is bounded below by zero, so an unbounded ray
    // here can only be numerical noise
    if (out != PhaseOutcome::kConverged)
      return {LpStatus::kNumericalFailure, {}, 0.0, iterations};
    const double phase1 = -tb.cost_row(tb.cols);
    if (phase1 > kSimplexFeasTol) return {LpStatus::kInfeasible, {}, 0.0, iterations};

    // Drive remaining artificials out of the basis.
    for (int r = 0; r < m; ++r) {
      const int b = tb.basis[static_cast<std::size_t>(r)];
      if (tb.kind[static_cast<std::size_t>(b)] != ColKind::kArtificial) continue;
      int enter = -1;
      for (int j = 0; j < tb.cols; ++j)
        if (tb.kind[static_cast<std::size_t>(j)] != ColKind::kArtificial &&
            std::abs(tb.t(r, j)) > kPivotTol) {
          enter = j;
          break;
        }
      if (enter >= 0) {
        pivot(tb, r, enter);
        ++iterations;
      }
      // else: redundant row; artificial stays basic at value 0
    }
  }

  // Phase 2: original costs over shifted variables.
  tb.cost_row = Eigen::RowVectorXd::Zero(tb.cols + 1);
  for (Eigen::Index j = 0; j < n; ++j) tb.cost_row(j) = lp.cost(j);
  for (int r = 0; r < m; ++r) {
    const int b = tb.basis[static_cast<std::size_t>(r)];
    const double cb = tb.cost_row(b);
    if (cb != 0.0) tb.cost_row -= cb * tb.t.row(r);
  }

  const PhaseOutcome out = run_phase(tb, iterations, bland_after, hard_cap);
  if (out == PhaseOutcome::kStalled) return {LpStatus::kNumericalFailure, {}, 0.0, iterations};
  if (out == PhaseOutcome::kUnbounded) return {LpStatus::kUnbounded, {}, 0.0, iterations};

  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) {
    const int b = tb.basis[static_cast<std::size_t>(r)];
    if (b < n) y(b) = tb.rhs(r);
  }
  result.status = LpStatus::kOptimal;
  result.point = y + lp.lb;
  result.objective = lp.cost.dot(result.point);
  result.iterations = iterations;
  return result;
}

LpProblem lp_relaxation_of(const MilpModel& model) {
  const MilpModel expanded = to_big_m(model);
  LpProblem lp;
  const Eigen::Index n = static_cast<Eigen::Index>(expanded.variables().size());
  lp.cost = Eigen::VectorXd::Zero(n);
  lp.lb = Eigen::VectorXd::Zero(n);
  lp.ub = Eigen::VectorXd::Zero(n);
  for (const auto& v : expanded.variables()) {
    lp.cost(v.id) = v.cost;
    lp.lb(v.id) = v.lb;
    lp.ub(v.id) = v.ub;
  }
  for (const auto& c : expanded.linear_constraints()) lp.rows.push_back({c.terms, c.sense, c.rhs});
  return lp;
}

}  // namespace net2milp
