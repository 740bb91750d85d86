#include "net2milp/milp.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "net2milp/network_io.hpp"

namespace net2milp {

int MilpModel::add_variable(std::string name, VarKind kind, double lb, double ub, double cost) {
  if (name.empty()) throw std::invalid_argument("variable: empty name");
  if (kind == VarKind::kBinary && (lb != 0.0 || ub != 1.0))
    throw std::invalid_argument("variable " + name + ": binary requires bounds [0,1]");
  if (std::isnan(lb) || std::isnan(ub) || lb > ub)
    throw std::invalid_argument("variable " + name + ": requires lb <= ub");
  Variable v;
  v.id = static_cast<int>(vars_.size());
  v.name = std::move(name);
  v.kind = kind;
  v.lb = lb;
  v.ub = ub;
  v.cost = cost;
  vars_.push_back(std::move(v));
  return vars_.back().id;
}

namespace {

void check_terms(const LinearConstraint& c, std::size_t var_count) {
  std::set<int> seen;
  for (const auto& [id, coef] : c.terms) {
    if (id < 0 || static_cast<std::size_t>(id) >= var_count)
      throw std::invalid_argument("constraint " + c.name + ": unknown variable id " +
                                  std::to_string(id));
    if (!seen.insert(id).second)
      throw std::invalid_argument("constraint " + c.name + ": duplicate variable id " +
                                  std::to_string(id));
    if (!std::isfinite(coef))
      throw std::invalid_argument("constraint " + c.name + ": non-finite coefficient");
  }
  if (!std::isfinite(c.rhs))
    throw std::invalid_argument("constraint " + c.name + ": non-finite rhs");
}

}  // namespace

void MilpModel::add_linear(LinearConstraint c) {
  if (c.name.empty()) c.name = "c" + std::to_string(linear_.size());
  check_terms(c, vars_.size());
  linear_.push_back(std::move(c));
}

void MilpModel::add_indicator(IndicatorConstraint c) {
  if (c.guard < 0 || static_cast<std::size_t>(c.guard) >= vars_.size())
    throw std::invalid_argument("indicator: unknown guard id " + std::to_string(c.guard));
  if (variable(c.guard).kind != VarKind::kBinary)
    throw std::invalid_argument("indicator: guard " + variable(c.guard).name + " is not binary");
  if (c.active_when != 0 && c.active_when != 1)
    throw std::invalid_argument("indicator: active_when must be 0 or 1");
  if (c.implied.sense != Sense::kLe)
    throw std::invalid_argument("indicator: implied constraint must have sense <=");
  if (c.implied.name.empty()) c.implied.name = "ind" + std::to_string(indicators_.size());
  check_terms(c.implied, vars_.size());
  indicators_.push_back(std::move(c));
}

std::size_t MilpModel::binary_count() const {
  std::size_t n = 0;
  for (const auto& v : vars_)
    if (v.kind == VarKind::kBinary) ++n;
  return n;
}

void MilpModel::validate() const {
  for (const auto& c : linear_) check_terms(c, vars_.size());
  for (const auto& c : indicators_) {
    check_terms(c.implied, vars_.size());
    if (variable(c.guard).kind != VarKind::kBinary)
      throw std::invalid_argument("indicator " + c.implied.name + ": guard not binary");
  }
}

MilpModel to_big_m(const MilpModel& model) {
  MilpModel out;
  for (const auto& v : model.variables()) out.add_variable(v.name, v.kind, v.lb, v.ub, v.cost);
  for (const auto& c : model.linear_constraints()) out.add_linear(c);

  for (const auto& ind : model.indicator_constraints()) {
    // Max of the implied left side over the variable box.
    double lhs_max = 0.0;
    for (const auto& [id, coef] : ind.implied.terms) {
      const Variable& v = model.variable(id);
      const double corner = coef > 0 ? v.ub : v.lb;
      if (!std::isfinite(corner * coef))
        throw std::invalid_argument("to_big_m: variable " + v.name +
                                    " lacks the finite bound needed by indicator " +
                                    ind.implied.name);
      lhs_max += coef * corner;
    }
    const double big_m = lhs_max - ind.implied.rhs;
    if (big_m <= 0) continue;  // implied by the bounds alone

    LinearConstraint row = ind.implied;
    row.name = ind.implied.name + "_bigm";
    if (ind.active_when == 1) {
      // Σa·x ≤ r + M(1−z)  ⇔  Σa·x + M·z ≤ r + M
      row.terms.emplace_back(ind.guard, big_m);
      row.rhs += big_m;
    } else {
      // Σa·x ≤ r + M·z  ⇔  Σa·x − M·z ≤ r
      row.terms.emplace_back(ind.guard, -big_m);
    }
    out.add_linear(std::move(row));
  }
  return out;
}

namespace {

void append_terms(std::string& out, const std::vector<std::pair<int, double>>& terms,
                  const MilpModel& model) {
  bool first = true;
  for (const auto& [id, coef] : terms) {
    if (first) {
      out += coef < 0 ? "- " : "";
      first = false;
    } else {
      out += coef < 0 ? " - " : " + ";
    }
    out += fmt_real(std::abs(coef));
    out += " ";
    out += model.variable(id).name;
  }
  if (first) out += "0";
}

const char* sense_str(Sense s) {
  switch (s) {
    case Sense::kLe: return "<=";
    case Sense::kEq: return "=";
    default: return ">=";
  }
}

}  // namespace

std::string write_lp(const MilpModel& model) {
  model.validate();
  std::string out;
  out += "Minimize\n obj: ";
  {
    bool first = true;
    for (const auto& v : model.variables()) {
      if (v.cost == 0.0) continue;
      if (first) {
        out += v.cost < 0 ? "- " : "";
        first = false;
      } else {
        out += v.cost < 0 ? " - " : " + ";
      }
      out += fmt_real(std::abs(v.cost));
      out += " ";
      out += v.name;
    }
    if (first) out += "0";
  }
  out += "\nSubject To\n";
  for (const auto& c : model.linear_constraints()) {
    out += " " + c.name + ": ";
    append_terms(out, c.terms, model);
    out += std::string(" ") + sense_str(c.sense) + " " + fmt_real(c.rhs) + "\n";
  }
  for (const auto& c : model.indicator_constraints()) {
    out += " " + c.implied.name + ": " + model.variable(c.guard).name + " = " +
           std::to_string(c.active_when) + " -> ";
    append_terms(out, c.implied.terms, model);
    out += std::string(" ") + sense_str(c.implied.sense) + " " + fmt_real(c.implied.rhs) + "\n";
  }
  out += "Bounds\n";
  for (const auto& v : model.variables()) {
    if (v.lb == v.ub) {
      out += " " + v.name + " = " + fmt_real(v.lb) + "\n";
    } else if (std::isinf(v.ub)) {
      out += " " + v.name + " >= " + fmt_real(v.lb) + "\n";
    } else {
      out += " " + fmt_real(v.lb) + " <= " + v.name + " <= " + fmt_real(v.ub) + "\n";
    }
  }
  bool any_binary = false;
  for (const auto& v : model.variables()) any_binary |= v.kind == VarKind::kBinary;
  if (any_binary) {
    out += "Binaries\n";
    for (const auto& v : model.variables())
      if (v.kind == VarKind::kBinary) out += " " + v.name + "\n";
  }
  out += "End\n";
  return out;
}

namespace {

bool is_number_start(const std::string& tok) {
  return !tok.empty() && (std::isdigit(static_cast<unsigned char>(tok[0])) || tok[0] == '.' ||
                          ((tok[0] == '-' || tok[0] == '+') && tok.size() > 1 &&
                           (std::isdigit(static_cast<unsigned char>(tok[1])) || tok[1] == '.')));
}

}  // namespace

MilpModel parse_lp(const std::string& text) {
  // Tokenize, dropping \-comments; keep ':' and sentinel keywords distinct.
  std::vector<std::string> tokens;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto cpos = line.find('\\');
      if (cpos != std::string::npos) line.resize(cpos);
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) {
        // split a trailing ':' so "name:" yields two tokens
        if (tok.size() > 1 && tok.back() == ':') {
          tokens.push_back(tok.substr(0, tok.size() - 1));
          tokens.emplace_back(":");
        } else {
          tokens.push_back(tok);
        }
      }
    }
  }

  auto section_at = [&](std::size_t i, const char* a, const char* b = nullptr) {
    if (tokens[i] == a) return true;
    return b != nullptr && tokens[i] == b;
  };

  // Pass 1: variable order from the Bounds section.
  MilpModel model;
  std::unordered_map<std::string, int> ids;
  {
    std::size_t i = 0;
    while (i < tokens.size() && tokens[i] != "Bounds") ++i;
    if (i == tokens.size()) throw std::invalid_argument("parse_lp: missing Bounds section");
    ++i;
    while (i < tokens.size() && !section_at(i, "Binaries", "End")) {
      double lb = 0.0, ub = kInf;
      std::string name;
      if (is_number_start(tokens[i])) {
        // lb <= name <= ub
        lb = std::stod(tokens[i]);
        if (tokens.at(i + 1) != "<=") throw std::invalid_argument("parse_lp: bad bounds line");
        name = tokens.at(i + 2);
        if (tokens.at(i + 3) != "<=") throw std::invalid_argument("parse_lp: bad bounds line");
        ub = std::stod(tokens.at(i + 4));
        i += 5;
      } else {
        name = tokens[i];
        const std::string& op = tokens.at(i + 1);
        const double v = std::stod(tokens.at(i + 2));
        if (op == "=") {
          lb = ub = v;
        } else if (op == ">=") {
          lb = v;
        } else if (op == "<=") {
          ub = v;
          lb = -kInf;
        } else {
          throw std::invalid_argument("parse_lp: bad bounds operator " + op);
        }
        i += 3;
      }
      const int id = model.add_variable(name, VarKind::kContinuous, lb, ub, 0.0);
      ids.emplace(name, id);
    }
    if (i < tokens.size() && tokens[i] == "Binaries") {
      ++i;
      while (i < tokens.size() && tokens[i] != "End") {
        auto it = ids.find(tokens[i]);
        if (it == ids.end())
          throw std::invalid_argument("parse_lp: binary " + tokens[i] + " not in Bounds");
        model.variable(it->second).kind = VarKind::kBinary;
        ++i;
      }
    }
  }

  auto lookup = [&](const std::string& name) {
    auto it = ids.find(name);
    if (it == ids.end()) throw std::invalid_argument("parse_lp: unknown variable " + name);
    return it->second;
  };

  // term list until a sense token or '->'; returns the stop token index.
  auto parse_terms = [&](std::size_t i, std::vector<std::pair<int, double>>& terms,
                         std::size_t end) {
    double sign = 1.0;
    bool have_coef = false;
    double coef = 1.0;
    while (i < end) {
      const std::string& tok = tokens[i];
      if (tok == "<=" || tok == ">=" || tok == "=" || tok == "->") break;
      if (tok == "+") {
        sign = 1.0;
      } else if (tok == "-") {
        sign = -1.0;
      } else if (is_number_start(tok)) {
        coef = std::stod(tok);
        have_coef = true;
      } else {
        terms.emplace_back(lookup(tok), sign * (have_coef ? coef : 1.0));
        sign = 1.0;
        coef = 1.0;
        have_coef = false;
      }
      ++i;
    }
    return i;
  };

  // Pass 2: objective.
  {
    std::size_t i = 0;
    while (i < tokens.size() && tokens[i] != "Minimize") ++i;
    if (i == tokens.size()) throw std::invalid_argument("parse_lp: missing Minimize section");
    ++i;
    if (i + 1 < tokens.size() && tokens[i + 1] == ":") i += 2;  // obj label
    double sign = 1.0;
    bool have_coef = false;
    double coef = 1.0;
    while (i < tokens.size() && tokens[i] != "Subject") {
      const std::string& tok = tokens[i];
      if (tok == "+") {
        sign = 1.0;
      } else if (tok == "-") {
        sign = -1.0;
      } else if (is_number_start(tok)) {
        coef = std::stod(tok);
        have_coef = true;
      } else {
        model.variable(lookup(tok)).cost += sign * (have_coef ? coef : 1.0);
        sign = 1.0;
        coef = 1.0;
        have_coef = false;
      }
      ++i;
    }
    // a bare "0" objective leaves a pending coefficient; harmless
  }

  // Pass 3: constraints between "Subject To" and "Bounds".
  {
    std::size_t i = 0;
    while (i < tokens.size() && tokens[i] != "Subject") ++i;
    i += 2;  // Subject To
    std::size_t bounds_at = i;
    while (bounds_at < tokens.size() && tokens[bounds_at] != "Bounds") ++bounds_at;

    while (i < bounds_at) {
      if (tokens.at(i + 1) != ":")
        throw std::invalid_argument("parse_lp: expected 'name:' at " + tokens[i]);
      std::string name = tokens[i];
      i += 2;

      // Indicator form: guard = v -> terms sense rhs
      bool is_indicator = false;
      if (i + 2 < bounds_at && tokens[i + 1] == "=" &&
          (tokens[i + 2] == "0" || tokens[i + 2] == "1")) {
        std::size_t j = i + 3;
        // distinguish "z = 1 -> ..." from a row "z = 1"
        if (j < bounds_at && tokens[j] == "->") is_indicator = true;
      }

      if (is_indicator) {
        IndicatorConstraint ind;
        ind.guard = lookup(tokens[i]);
        ind.active_when = std::stoi(tokens[i + 2]);
        i += 4;
        ind.implied.name = std::move(name);
        i = parse_terms(i, ind.implied.terms, bounds_at);
        const std::string& op = tokens.at(i);
        ind.implied.sense = op == "<=" ? Sense::kLe : (op == "=" ? Sense::kEq : Sense::kGe);
        ind.implied.rhs = std::stod(tokens.at(i + 1));
        i += 2;
        model.add_indicator(std::move(ind));
      } else {
        LinearConstraint c;
        c.name = std::move(name);
        i = parse_terms(i, c.terms, bounds_at);
        const std::string& op = tokens.at(i);
        c.sense = op == "<=" ? Sense::kLe : (op == "=" ? Sense::kEq : Sense::kGe);
        c.rhs = std::stod(tokens.at(i + 1));
        i += 2;
        model.add_linear(std::move(c));
      }
    }
  }

  model.validate();
  return model;
}

EvalResult evaluate(const MilpModel& model, const std::vector<double>& assignment) {
  if (assignment.size() != model.variables().size())
    throw std::invalid_argument("evaluate: assignment covers " +
                                std::to_string(assignment.size()) + " of " +
                                std::to_string(model.variables().size()) + " variables");
  EvalResult res;
  for (const auto& v : model.variables()) {
    res.objective += v.cost * assignment[static_cast<std::size_t>(v.id)];
    const double x = assignment[static_cast<std::size_t>(v.id)];
    if (res.feasible && (x < v.lb - kFeasTol || x > v.ub + kFeasTol)) {
      res.feasible = false;
      res.first_violation = "bound " + v.name + " = " + fmt_real(x) + " outside [" +
                            fmt_real(v.lb) + ", " + fmt_real(v.ub) + "]";
    }
  }
  auto lhs_of = [&](const LinearConstraint& c) {
    double lhs = 0;
    for (const auto& [id, coef] : c.terms) lhs += coef * assignment[static_cast<std::size_t>(id)];
    return lhs;
  };
  auto row_ok = [&](const LinearConstraint& c) {
    const double lhs = lhs_of(c);
    switch (c.sense) {
      case Sense::kLe: return lhs <= c.rhs + kFeasTol;
      case Sense::kEq: return std::abs(lhs - c.rhs) <= kFeasTol;
      default: return lhs >= c.rhs - kFeasTol;
    }
  };
  if (res.feasible)
    for (const auto& c : model.linear_constraints())
      if (!row_ok(c)) {
        res.feasible = false;
        res.first_violation =
            "constraint " + c.name + ": lhs = " + fmt_real(lhs_of(c)) + " vs rhs " + fmt_real(c.rhs);
        break;
      }
  if (res.feasible)
    for (const auto& ind : model.indicator_constraints()) {
      const double g = assignment[static_cast<std::size_t>(ind.guard)];
      if (std::abs(g - ind.active_when) <= kFeasTol && !row_ok(ind.implied)) {
        res.feasible = false;
        res.first_violation = "indicator " + ind.implied.name + " active but implied violated";
        break;
      }
    }
  return res;
}

}  // namespace net2milp
