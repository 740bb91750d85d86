#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace net2milp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary };
enum class Sense { kLe, kEq, kGe };

struct Variable {
  int id = -1;
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lb = 0.0;
  double ub = kInf;
  double cost = 0.0;  // objective coefficient
};

struct LinearConstraint {
  std::vector<std::pair<int, double>> terms;  // (var id, coefficient), ids unique
  Sense sense = Sense::kLe;
  double rhs = 0.0;
  std::string name;
};

/// guard = active_when  →  implied (a ≤ constraint).
struct IndicatorConstraint {
  int guard = -1;
  int active_when = 1;
  LinearConstraint implied;
};

struct Violation {
  std::string what;
};

struct EvalResult {
  bool feasible = true;
  double objective = 0.0;
  std::string first_violation;  // empty when feasible
};

/// Variables, linear constraints, indicator constraints, minimization
/// objective (Σ cost·value over all variables). Built single-threaded,
/// immutable afterwards.
class MilpModel {
 public:
  int add_variable(std::string name, VarKind kind, double lb, double ub, double cost = 0.0);
  int add_continuous(std::string name, double lb, double ub, double cost = 0.0) {
    return add_variable(std::move(name), VarKind::kContinuous, lb, ub, cost);
  }
  int add_binary(std::string name, double cost = 0.0) {
    return add_variable(std::move(name), VarKind::kBinary, 0.0, 1.0, cost);
  }

  void add_linear(LinearConstraint c);
  void add_indicator(IndicatorConstraint c);

  const std::vector<Variable>& variables() const { return vars_; }
  std::vector<Variable>& variables() { return vars_; }
  const Variable& variable(int id) const { return vars_.at(static_cast<std::size_t>(id)); }
  Variable& variable(int id) { return vars_.at(static_cast<std::size_t>(id)); }
  const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
  const std::vector<IndicatorConstraint>& indicator_constraints() const { return indicators_; }

  std::size_t binary_count() const;

  /// Checks that every constraint references existing ids and every term
  /// list is duplicate-free.
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinearConstraint> linear_;
  std::vector<IndicatorConstraint> indicators_;
};

/// Lowers every indicator to a big-M row using the variable bounds:
/// z=1 → Σa·x ≤ r becomes Σa·x ≤ r + M(1−z) with
/// M = max_{bounds} Σa·x − r. Vacuous indicators (M ≤ 0) are dropped.
/// Throws when a needed bound is infinite, naming the variable.
MilpModel to_big_m(const MilpModel& model);

/// LP text (Minimize / Subject To / Bounds / Binaries / End); indicators in
/// the conditional `guard = v -> constraint` syntax. Deterministic: byte-
/// identical text for identical models. Reals at 17 significant digits.
std::string write_lp(const MilpModel& model);

/// Reads the format write_lp emits (variable order recovered from the
/// Bounds section, which lists every variable in id order).
MilpModel parse_lp(const std::string& text);

/// Bounds and linear rows at 1e-6 absolute tolerance; an indicator is
/// checked when its guard sits within 1e-6 of the active value.
EvalResult evaluate(const MilpModel& model, const std::vector<double>& assignment);

constexpr double kFeasTol = 1e-6;

}  // namespace net2milp
