#include <doctest.h>

#include "net2milp/simplex.hpp"
#include "support/oracles.hpp"

using namespace net2milp;

namespace {

LpProblem make_lp(int n) {
  LpProblem lp;
  lp.cost = Eigen::VectorXd::Zero(n);
  lp.lb = Eigen::VectorXd::Zero(n);
  lp.ub = Eigen::VectorXd::Constant(n, kInf);
  return lp;
}

}  // namespace

TEST_CASE("simplex: minimize -x s.t. x <= 5, x >= 0") {
  LpProblem lp = make_lp(1);
  lp.cost(0) = -1.0;
  lp.rows.push_back({{{0, 1.0}}, Sense::kLe, 5.0});
  const LpResult r = simplex_solve(lp);
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.point(0) == doctest::Approx(5.0));
  CHECK(r.objective == doctest::Approx(-5.0));
}

TEST_CASE("simplex: x >= 1 and x <= 0 is infeasible") {
  LpProblem lp = make_lp(1);
  lp.rows.push_back({{{0, 1.0}}, Sense::kGe, 1.0});
  lp.rows.push_back({{{0, 1.0}}, Sense::kLe, 0.0});
  CHECK(simplex_solve(lp).status == LpStatus::kInfeasible);
}

TEST_CASE("simplex: unbounded ray detected") {
  LpProblem lp = make_lp(2);
  lp.cost << -1.0, 0.0;
  lp.rows.push_back({{{1, 1.0}}, Sense::kLe, 3.0});
  CHECK(simplex_solve(lp).status == LpStatus::kUnbounded);
}

TEST_CASE("simplex: equality rows and shifted lower bounds") {
  LpProblem lp = make_lp(2);
  lp.lb << -2.0, -1.0;
  lp.ub << 5.0, 5.0;
  lp.cost << 1.0, 1.0;
  lp.rows.push_back({{{0, 1.0}, {1, 1.0}}, Sense::kEq, 1.0});
  const LpResult r = simplex_solve(lp);
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.point(0) + r.point(1) == doctest::Approx(1.0));
}

TEST_CASE("simplex: degenerate cycling-prone instance terminates") {
  // Beale's classic cycling example (degenerate under naive Dantzig).
  LpProblem lp = make_lp(4);
  lp.cost << -0.75, 150.0, -0.02, 6.0;
  lp.rows.push_back({{{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}, Sense::kLe, 0.0});
  lp.rows.push_back({{{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}, Sense::kLe, 0.0});
  lp.rows.push_back({{{2, 1.0}}, Sense::kLe, 1.0});
  const LpResult r = simplex_solve(lp);
  REQUIRE(r.status == LpStatus::kOptimal);
  CHECK(r.objective == doctest::Approx(-0.05));
}

TEST_CASE("simplex matches vertex-enumeration oracle on random feasible LPs") {
  Rng rng = Rng::rooted(211);
  int solved = 0;
  while (solved < 50) {
    const int n = 2 + static_cast<int>(rng.below(4));      // up to 5 vars
    const int rows = 1 + static_cast<int>(rng.below(5));   // up to 5 rows
    LpProblem lp = make_lp(n);
    for (int i = 0; i < n; ++i) {
      lp.lb(i) = rng.uniform(-2.0, 0.0);
      lp.ub(i) = lp.lb(i) + rng.uniform(0.5, 3.0);  // finite box keeps it bounded
      lp.cost(i) = rng.uniform(-2.0, 2.0);
    }
    for (int r = 0; r < rows; ++r) {
      LpRow row;
      for (int v = 0; v < n; ++v)
        if (rng.uniform() < 0.6) row.terms.emplace_back(v, rng.uniform(-2.0, 2.0));
      if (row.terms.empty()) row.terms.emplace_back(0, 1.0);
      row.sense = rng.uniform() < 0.5 ? Sense::kLe : Sense::kGe;
      double at_zero = 0;
      for (const auto& [id, a] : row.terms) at_zero += a * 0.0;
      row.rhs = row.sense == Sense::kLe ? at_zero + rng.uniform(0.1, 2.0)
                                        : at_zero - rng.uniform(0.1, 2.0);
      lp.rows.push_back(std::move(row));
    }
    // all-zero point may be outside the box; oracle decides feasibility
    const auto want = oracles::lp_vertex_oracle(lp);
    const LpResult got = simplex_solve(lp);
    if (!want.feasible) {
      CHECK(got.status == LpStatus::kInfeasible);
      continue;
    }
    REQUIRE(got.status == LpStatus::kOptimal);
    CHECK(got.objective == doctest::Approx(want.objective).epsilon(1e-6));
    ++solved;
  }
}

TEST_CASE("simplex rejects missing finite lower bound") {
  LpProblem lp = make_lp(1);
  lp.lb(0) = -kInf;
  CHECK_THROWS(simplex_solve(lp));
}
