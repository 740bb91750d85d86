#include "net2milp/branch_and_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <set>

namespace net2milp {

namespace {

constexpr double kIntTol = 1e-6;

struct PreparedIndicator {
  int guard = -1;
  int active_when = 1;
  LinearConstraint implied;
  std::optional<LinearConstraint> big_m_row;  // absent when no finite M exists
  bool vacuous = false;                       // implied by the bounds alone
};

struct Node {
  double bound = -kInf;  // parent LP objective; root uses -inf
  int depth = 0;
  long id = 0;
  std::vector<std::pair<int, int>> fixes;  // (binary var id, value)
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth > b.depth;  // deeper first on ties
    return a.id < b.id;
  }
};

bool is_integral(double v) { return std::abs(v - std::round(v)) <= kIntTol; }

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNodeLimit: return "node_limit";
    case SolveStatus::kTimeLimit: return "time_limit";
    default: return "numerical_failure";
  }
}

SolveResult branch_and_bound(const MilpModel& model, const BnbConfig& config) {
  model.validate();
  if (config.node_limit < 1) throw std::invalid_argument("bnb: node_limit must be >= 1");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  const Eigen::Index n = static_cast<Eigen::Index>(model.variables().size());
  std::vector<int> binaries;
  for (const auto& v : model.variables())
    if (v.kind == VarKind::kBinary) binaries.push_back(v.id);

  // Big-M rows where the bounds allow one; the rest resolve by branching.
  std::vector<PreparedIndicator> indicators;
  for (const auto& ind : model.indicator_constraints()) {
    PreparedIndicator p{ind.guard, ind.active_when, ind.implied, std::nullopt};
    double lhs_max = 0.0;
    bool finite = true;
    for (const auto& [id, coef] : ind.implied.terms) {
      const Variable& v = model.variable(id);
      const double corner = coef > 0 ? v.ub : v.lb;
      if (!std::isfinite(corner * coef) && coef != 0.0) {
        finite = false;
        break;
      }
      lhs_max += coef * corner;
    }
    if (finite) {
      const double big_m = lhs_max - ind.implied.rhs;
      if (big_m <= 0) {
        p.vacuous = true;
      } else {
        LinearConstraint row = ind.implied;
        row.name = ind.implied.name + "_bigm";
        if (ind.active_when == 1) {
          row.terms.emplace_back(ind.guard, big_m);
          row.rhs += big_m;
        } else {
          row.terms.emplace_back(ind.guard, -big_m);
        }
        p.big_m_row = std::move(row);
      }
    }
    indicators.push_back(std::move(p));
  }

  Eigen::VectorXd base_lb(n), base_ub(n), cost(n);
  for (const auto& v : model.variables()) {
    base_lb(v.id) = v.lb;
    base_ub(v.id) = v.ub;
    cost(v.id) = v.cost;
  }

  // Builds and solves the LP for one set of guard fixes.
  auto solve_node_lp = [&](const std::vector<std::pair<int, int>>& fixes) {
    LpProblem lp;
    lp.cost = cost;
    lp.lb = base_lb;
    lp.ub = base_ub;
    for (const auto& [id, val] : fixes) {
      lp.lb(id) = val;
      lp.ub(id) = val;
    }
    for (const auto& c : model.linear_constraints()) lp.rows.push_back({c.terms, c.sense, c.rhs});
    for (const auto& p : indicators) {
      if (p.vacuous) continue;
      const bool fixed = lp.lb(p.guard) == lp.ub(p.guard);
      if (fixed) {
        if (lp.lb(p.guard) == static_cast<double>(p.active_when))
          lp.rows.push_back({p.implied.terms, Sense::kLe, p.implied.rhs});
      } else if (p.big_m_row) {
        lp.rows.push_back({p.big_m_row->terms, Sense::kLe, p.big_m_row->rhs});
      }
    }
    return simplex_solve(lp);
  };

  SolveResult result;
  result.best_bound = -kInf;
  double incumbent_obj = kInf;
  std::vector<double> incumbent;

  std::set<Node, NodeOrder> open;
  long next_id = 0;
  open.insert(Node{-kInf, 0, next_id++, {}});

  auto finish = [&](SolveStatus status) {
    result.status = status;
    result.objective = incumbent_obj;
    result.assignment = incumbent;
    return result;
  };

  while (!open.empty()) {
    if (result.node_count >= config.node_limit) return finish(SolveStatus::kNodeLimit);
    if (config.time_budget_s > 0 && elapsed_s() > config.time_budget_s)
      return finish(SolveStatus::kTimeLimit);

    Node node = *open.begin();
    open.erase(open.begin());
    // global bound: min over open nodes and the incumbent; best-first makes
    // the popped bound the minimum over open nodes
    result.best_bound = std::max(result.best_bound, std::min(node.bound, incumbent_obj));
    if (node.bound >= incumbent_obj - config.gap && !incumbent.empty()) break;

    ++result.node_count;
    const LpResult lp = solve_node_lp(node.fixes);
    if (lp.status == LpStatus::kInfeasible) continue;
    if (lp.status == LpStatus::kNumericalFailure) return finish(SolveStatus::kNumericalFailure);
    // a node's feasible set is a restriction of the root's, so an
    // unbounded ray certifies the whole relaxation unbounded
    if (lp.status == LpStatus::kUnbounded) return finish(SolveStatus::kUnbounded);
    if (lp.objective >= incumbent_obj - config.gap) continue;

    // fractional binary to branch on
    int branch_var = -1;
    double branch_score = -1.0;
    for (int b : binaries) {
      const double v = lp.point(b);
      if (is_integral(v)) continue;
      const double frac = std::abs(v - std::round(v));
      if (config.branching == BranchRule::kFirstFractional) {
        branch_var = b;
        break;
      }
      if (frac > branch_score + 1e-12) {
        branch_score = frac;
        branch_var = b;
      }
    }

    if (branch_var < 0) {
      // integral point; check indicators that had no big-M row and are not fixed
      int violated_guard = -1;
      for (const auto& p : indicators) {
        if (p.vacuous || p.big_m_row) continue;
        bool fixed = base_lb(p.guard) == base_ub(p.guard);
        for (const auto& [id, val] : node.fixes)
          if (id == p.guard) fixed = true;
        if (fixed) continue;
        if (std::lround(lp.point(p.guard)) != p.active_when) continue;
        double lhs = 0;
        for (const auto& [id, coef] : p.implied.terms) lhs += coef * lp.point(id);
        if (lhs > p.implied.rhs + kFeasTol) {
          violated_guard = p.guard;
          break;
        }
      }
      if (violated_guard >= 0) {
        for (int val = 0; val <= 1; ++val) {
          Node child{lp.objective, node.depth + 1, next_id++, node.fixes};
          child.fixes.emplace_back(violated_guard, val);
          open.insert(std::move(child));
        }
        continue;
      }

      // candidate incumbent: snap binaries exactly and re-check
      std::vector<double> point(lp.point.data(), lp.point.data() + lp.point.size());
      std::vector<double> snapped = point;
      for (int b : binaries) snapped[static_cast<std::size_t>(b)] = std::round(snapped[static_cast<std::size_t>(b)]);
      EvalResult ev = evaluate(model, snapped);
      const std::vector<double>* accepted = nullptr;
      double obj = 0;
      if (ev.feasible) {
        accepted = &snapped;
        obj = ev.objective;
      } else {
        EvalResult raw = evaluate(model, point);
        if (raw.feasible) {
          accepted = &point;
          obj = raw.objective;
        }
      }
      if (accepted && obj < incumbent_obj) {
        incumbent_obj = obj;
        incumbent = *accepted;
      }
      continue;
    }

    for (int val = 0; val <= 1; ++val) {
      Node child{lp.objective, node.depth + 1, next_id++, node.fixes};
      child.fixes.emplace_back(branch_var, val);
      open.insert(std::move(child));
    }
  }

  if (incumbent.empty()) {
    result.status = SolveStatus::kInfeasible;
    result.objective = kInf;
    result.best_bound = kInf;
    return result;
  }
  if (open.empty()) result.best_bound = incumbent_obj;
  result.status = SolveStatus::kOptimal;
  result.objective = incumbent_obj;
  result.assignment = incumbent;
  return result;
}

}  // namespace net2milp
