#pragma once

// Independent oracles the tests check the implementation against. These
// are written against the plain definitions (explicit loops over raw
// indices) and deliberately share no code with the library paths they
// verify.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "net2milp/branch_and_bound.hpp"
#include "net2milp/milp.hpp"
#include "net2milp/network.hpp"
#include "net2milp/rng.hpp"
#include "net2milp/simplex.hpp"

namespace oracles {

using net2milp::Index;
using net2milp::Tensor;

// window-by-window quadruple loop, padding handled by index guards
inline Tensor conv2d_naive(const Tensor& input, const Tensor& kernel, Index stride, Index padding) {
  const Index h = input.extent(0), w = input.extent(1), f = kernel.extent(0);
  const Index oh = (h - f + 2 * padding) / stride + 1;
  const Index ow = (w - f + 2 * padding) / stride + 1;
  Tensor out({oh, ow});
  for (Index r = 0; r < oh; ++r)
    for (Index c = 0; c < ow; ++c) {
      double acc = 0;
      for (Index i = 0; i < f; ++i)
        for (Index j = 0; j < f; ++j) {
          const Index y = r * stride + i - padding;
          const Index x = c * stride + j - padding;
          const double v = (y < 0 || y >= h || x < 0 || x >= w) ? 0.0 : input(y, x);
          acc += v * kernel(i, j);
        }
      out(r, c) = acc;
    }
  return out;
}

// exhaustive per-window scan
inline Tensor maxpool_naive(const Tensor& input, Index f, Index stride) {
  const Index h = input.extent(0), w = input.extent(1);
  Tensor out({(h - f) / stride + 1, (w - f) / stride + 1});
  for (Index r = 0; r < out.extent(0); ++r)
    for (Index c = 0; c < out.extent(1); ++c) {
      double best = -std::numeric_limits<double>::infinity();
      for (Index i = 0; i < f; ++i)
        for (Index j = 0; j < f; ++j) best = std::max(best, input(r * stride + i, c * stride + j));
      out(r, c) = best;
    }
  return out;
}

// Straight-line dense-network evaluator over nested vectors; no Eigen, no
// tensor kernels.
inline std::vector<double> dense_forward_naive(
    const std::vector<std::vector<std::vector<double>>>& weights,
    const std::vector<std::vector<double>>& biases, const std::vector<bool>& relu_layer,
    std::vector<double> x) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    std::vector<double> next(weights[k].size(), 0.0);
    for (std::size_t j = 0; j < weights[k].size(); ++j) {
      double acc = biases[k][j];
      for (std::size_t i = 0; i < x.size(); ++i) acc += weights[k][j][i] * x[i];
      next[j] = relu_layer[k] && acc < 0 ? 0.0 : acc;
    }
    x = std::move(next);
  }
  return x;
}

// All basis subsets of the constraint system {rows as equalities at
// activity} + {bound faces}; best feasible vertex wins. Exact for small
// feasible bounded LPs.
struct VertexOracleResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

inline VertexOracleResult lp_vertex_oracle(const net2milp::LpProblem& lp) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Index n = lp.var_count();

  // candidate hyperplanes: each row (at its rhs) and each bound face
  struct Plane {
    VectorXd a;
    double b;
  };
  std::vector<Plane> planes;
  for (const auto& row : lp.rows) {
    VectorXd a = VectorXd::Zero(n);
    for (const auto& [id, coef] : row.terms) a(id) += coef;
    planes.push_back({a, row.rhs});
  }
  for (Index i = 0; i < n; ++i) {
    VectorXd a = VectorXd::Zero(n);
    a(i) = 1.0;
    planes.push_back({a, lp.lb(i)});
    if (std::isfinite(lp.ub(i))) planes.push_back({a, lp.ub(i)});
  }

  auto feasible_point = [&](const VectorXd& x) {
    constexpr double tol = 1e-7;
    for (Index i = 0; i < n; ++i)
      if (x(i) < lp.lb(i) - tol || x(i) > lp.ub(i) + tol) return false;
    for (const auto& row : lp.rows) {
      double lhs = 0;
      for (const auto& [id, coef] : row.terms) lhs += coef * x(id);
      switch (row.sense) {
        case net2milp::Sense::kLe:
          if (lhs > row.rhs + tol) return false;
          break;
        case net2milp::Sense::kGe:
          if (lhs < row.rhs - tol) return false;
          break;
        default:
          if (std::abs(lhs - row.rhs) > tol) return false;
      }
    }
    return true;
  };

  VertexOracleResult best;
  const std::size_t p = planes.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  // enumerate all n-subsets of planes
  std::vector<std::size_t> comb;
  comb.reserve(static_cast<std::size_t>(n));
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (comb.size() == static_cast<std::size_t>(n)) {
      MatrixXd A(n, n);
      VectorXd b(n);
      for (Index r = 0; r < n; ++r) {
        A.row(r) = planes[comb[static_cast<std::size_t>(r)]].a.transpose();
        b(r) = planes[comb[static_cast<std::size_t>(r)]].b;
      }
      Eigen::FullPivLU<MatrixXd> lu(A);
      if (lu.isInvertible()) {
        const VectorXd x = lu.solve(b);
        if (feasible_point(x)) {
          best.feasible = true;
          best.objective = std::min(best.objective, lp.cost.dot(x));
        }
      }
      return;
    }
    for (std::size_t i = start; i < p; ++i) {
      comb.push_back(i);
      self(self, i + 1);
      comb.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

// 2^b enumeration: fix every guard pattern, solve the pure LP.
struct MilpOracleResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

inline MilpOracleResult milp_exhaustive_oracle(const net2milp::MilpModel& model) {
  using namespace net2milp;
  std::vector<int> binaries;
  for (const auto& v : model.variables())
    if (v.kind == VarKind::kBinary) binaries.push_back(v.id);
  const std::size_t b = binaries.size();
  MilpOracleResult best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << b); ++mask) {
    LpProblem lp;
    const Eigen::Index n = static_cast<Eigen::Index>(model.variables().size());
    lp.cost = Eigen::VectorXd::Zero(n);
    lp.lb = Eigen::VectorXd::Zero(n);
    lp.ub = Eigen::VectorXd::Zero(n);
    for (const auto& v : model.variables()) {
      lp.cost(v.id) = v.cost;
      lp.lb(v.id) = v.lb;
      lp.ub(v.id) = v.ub;
    }
    for (std::size_t i = 0; i < b; ++i) {
      const double val = (mask >> i) & 1 ? 1.0 : 0.0;
      lp.lb(binaries[i]) = val;
      lp.ub(binaries[i]) = val;
    }
    for (const auto& c : model.linear_constraints()) lp.rows.push_back({c.terms, c.sense, c.rhs});
    for (const auto& ind : model.indicator_constraints()) {
      const double g = lp.lb(ind.guard);
      if (g == static_cast<double>(ind.active_when))
        lp.rows.push_back({ind.implied.terms, Sense::kLe, ind.implied.rhs});
    }
    const LpResult r = simplex_solve(lp);
    if (r.status == LpStatus::kOptimal && r.objective < best.objective) {
      best.feasible = true;
      best.objective = r.objective;
    }
  }
  return best;
}

// --- random instance generators -------------------------------------------

inline Tensor random_tensor(const std::vector<Index>& shape, net2milp::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline net2milp::NetworkSpec random_dense_net(Index inputs, std::vector<Index> hidden,
                                              Index classes, net2milp::Rng& rng,
                                              bool bias = true) {
  using namespace net2milp;
  NetworkSpec net;
  net.input_shape = {inputs};
  net.class_count = classes;
  Index fan_in = inputs;
  hidden.push_back(classes);
  for (Index size : hidden) {
    DenseLayer d;
    d.weights = random_tensor({size, fan_in}, rng).map2d();
    d.bias = bias ? Eigen::VectorXd(random_tensor({size}, rng).data()) : Eigen::VectorXd::Zero(size);
    d.activation = Activation::kRelu;
    net.layers.emplace_back(std::move(d));
    fan_in = size;
  }
  net.validate();
  return net;
}

// random MILP with bounded variables, mixed senses, indicator rows
inline net2milp::MilpModel random_milp(net2milp::Rng& rng, int continuous, int binaries,
                                       int rows, int indicators) {
  using namespace net2milp;
  MilpModel m;
  for (int i = 0; i < continuous; ++i)
    m.add_continuous("v" + std::to_string(i), rng.uniform(-2.0, 0.0), rng.uniform(0.5, 3.0),
                     rng.uniform(-2.0, 2.0));
  for (int i = 0; i < binaries; ++i) m.add_binary("y" + std::to_string(i), rng.uniform(-2.0, 2.0));
  const int total = continuous + binaries;
  for (int r = 0; r < rows; ++r) {
    LinearConstraint c;
    for (int v = 0; v < total; ++v)
      if (rng.uniform() < 0.4) c.terms.emplace_back(v, rng.uniform(-2.0, 2.0));
    if (c.terms.empty()) c.terms.emplace_back(static_cast<int>(rng.below(total)), 1.0);
    // keep the all-zeros point feasible so the instance cannot be empty
    const double slack = rng.uniform(0.1, 2.0);
    c.sense = rng.uniform() < 0.5 ? Sense::kLe : Sense::kGe;
    c.rhs = c.sense == Sense::kLe ? slack : -slack;
    m.add_linear(std::move(c));
  }
  for (int i = 0; i < indicators; ++i) {
    IndicatorConstraint ind;
    ind.guard = continuous + static_cast<int>(rng.below(binaries));
    ind.active_when = rng.uniform() < 0.5 ? 1 : 0;
    LinearConstraint c;
    for (int v = 0; v < continuous; ++v)
      if (rng.uniform() < 0.5) c.terms.emplace_back(v, rng.uniform(-2.0, 2.0));
    if (c.terms.empty()) c.terms.emplace_back(static_cast<int>(rng.below(continuous)), 1.0);
    c.sense = Sense::kLe;
    c.rhs = rng.uniform(0.0, 2.0);
    ind.implied = std::move(c);
    m.add_indicator(std::move(ind));
  }
  return m;
}

}  // namespace oracles
