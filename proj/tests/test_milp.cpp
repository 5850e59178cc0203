#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flexbus/common.hpp"
#include "flexbus/milp.hpp"

using namespace flexbus;
using namespace flexbus::milp;

namespace {

// exhaustive reference for pure-binary models
double enumerate_binary_optimum(const Model& m) {
  const int n = m.num_variables();
  double best = kInf;
  for (long long mask = 0; mask < (1ll << n); ++mask) {
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = (mask >> j) & 1 ? 1.0 : 0.0;
    bool ok = true;
    for (int i = 0; i < m.num_constraints() && ok; ++i) {
      const Constraint& c = m.constraint(i);
      double lhs = 0.0;
      for (auto [j, a] : c.coeffs) lhs += a * x[j];
      switch (c.sense) {
        case Sense::le: ok = lhs <= c.rhs + 1e-9; break;
        case Sense::ge: ok = lhs >= c.rhs - 1e-9; break;
        case Sense::eq: ok = std::abs(lhs - c.rhs) <= 1e-9; break;
      }
    }
    if (!ok) continue;
    double obj = m.objective_constant();
    for (int j = 0; j < n; ++j) obj += m.objective_coeff(j) * x[j];
    best = std::min(best, obj);
  }
  return best;
}

}  // namespace

TEST_CASE("small knapsack matches subset enumeration") {
  // min -value subject to weight <= 10
  double value[5] = {6, 5, 4, 3, 2};
  double weight[5] = {5, 4, 3, 2, 1};
  Model m;
  LinExpr row;
  for (int i = 0; i < 5; ++i) {
    int x = m.add_binary("x" + std::to_string(i));
    m.add_objective(x, -value[i]);
    row.push_back({x, weight[i]});
  }
  m.add_constraint("cap", row, Sense::le, 10.0);
  Solution sol = solve(m);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(enumerate_binary_optimum(m)).epsilon(1e-9));
}

TEST_CASE("contradictory equality is infeasible") {
  Model m;
  int x = m.add_binary("x");
  m.add_constraint("zero", {{x, 0.0}}, Sense::eq, 1.0);
  CHECK(solve(m).status == SolveStatus::infeasible);
}

TEST_CASE("unbounded relaxation at the root is reported") {
  Model m;
  int x = m.add_continuous("x", 0.0, kInf);
  m.add_objective(x, -1.0);
  CHECK(solve(m).status == SolveStatus::unbounded);
}

TEST_CASE("product gadget pins z = x*y at every binary point") {
  for (int xv = 0; xv <= 1; ++xv)
    for (int yv = 0; yv <= 1; ++yv)
      for (double dir : {1.0, -1.0}) {
        Model m;
        int x = m.add_binary("x");
        int y = m.add_binary("y");
        int z = linearize_product(m, x, y);
        m.set_variable_bounds(x, xv, xv);
        m.set_variable_bounds(y, yv, yv);
        m.add_objective(z, dir);
        Solution sol = solve(m);
        REQUIRE(sol.status == SolveStatus::optimal);
        CHECK(sol.values[z] == doctest::Approx(double(xv * yv)).epsilon(1e-9));
      }
}

TEST_CASE("product gadget rejects non-binary inputs") {
  Model m;
  int x = m.add_binary("x");
  int c = m.add_continuous("c", 0.0, 1.0);
  CHECK_THROWS_AS(linearize_product(m, x, c), Error);
}

TEST_CASE("bilinear indicator releases when inactive and binds when active") {
  auto build = [&](double fixed_x, double load) {
    Model m;
    int x = m.add_binary("x");
    int z = m.add_continuous("zeta", 0.0, 1000.0);
    m.set_variable_bounds(x, fixed_x, fixed_x);
    m.add_constraint("load", {{z, 1.0}}, Sense::eq, load);
    linearize_bilinear_indicator(m, x, {{{z, 1.0}}}, 12.0, 1e6);
    return solve(m);
  };
  CHECK(build(1.0, 13.0).status == SolveStatus::infeasible);
  CHECK(build(1.0, 12.0).status == SolveStatus::optimal);
  CHECK(build(0.0, 999.0).status == SolveStatus::optimal);
}

TEST_CASE("a too-small indicator bound is rejected by the audit") {
  // the release ceiling (24) wrongly cuts a feasible point at z = 30, so the
  // released row ends up binding at the optimum
  Model m;
  int x = m.add_binary("x");
  int z = m.add_continuous("zeta", 0.0, 30.0);
  m.set_variable_bounds(x, 0.0, 0.0);
  m.add_objective(z, -1.0);
  linearize_bilinear_indicator(m, x, {{{z, 1.0}}}, 12.0, 2.0);
  CHECK_THROWS_AS(solve(m), Error);
}

TEST_CASE("random binary models match enumeration across 100 seeds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, 5);
    int n = 3 + static_cast<int>(rng.next_double() * 12.0);
    if (seed % 17 == 0) n = 18 + static_cast<int>(rng.next_double() * 3.0);  // up to 20
    Model m;
    for (int j = 0; j < n; ++j) {
      int x = m.add_binary("x" + std::to_string(j));
      m.add_objective(x, std::floor(rng.next_double() * 21.0) - 10.0);
    }
    int rows = 1 + static_cast<int>(rng.next_double() * 4.0);
    for (int r = 0; r < rows; ++r) {
      LinExpr row;
      for (int j = 0; j < n; ++j) {
        double c = std::floor(rng.next_double() * 11.0) - 5.0;
        if (c != 0.0) row.push_back({j, c});
      }
      if (row.empty()) row.push_back({0, 1.0});
      double rhs = std::floor(rng.next_double() * 15.0) - 3.0;
      Sense s = r % 3 == 0 ? Sense::le : (r % 3 == 1 ? Sense::ge : Sense::le);
      m.add_constraint("r" + std::to_string(r), row, s, rhs);
    }
    double expect = enumerate_binary_optimum(m);
    Solution sol = solve(m);
    if (!std::isfinite(expect)) {
      CHECK(sol.status == SolveStatus::infeasible);
    } else {
      REQUIRE(sol.status == SolveStatus::optimal);
      CHECK(sol.objective == doctest::Approx(expect).epsilon(1e-7));
    }
  }
}

TEST_CASE("mixed-integer model with continuous tail") {
  // min 3a + 2b + 0.5t ; a,b integer; t >= 7.3 - a - 2b ; a <= 4, b <= 4
  Model m;
  int a = m.add_integer("a", 4.0);
  int b = m.add_integer("b", 4.0);
  int t = m.add_continuous("t", 0.0, kInf);
  m.add_objective(a, 3.0);
  m.add_objective(b, 2.0);
  m.add_objective(t, 0.5);
  m.add_constraint("c", {{a, 1.0}, {b, 2.0}, {t, 1.0}}, Sense::ge, 7.3);
  Solution sol = solve(m);
  REQUIRE(sol.status == SolveStatus::optimal);
  // brute force over the integer grid
  double best = kInf;
  for (int av = 0; av <= 4; ++av)
    for (int bv = 0; bv <= 4; ++bv) {
      double tv = std::max(0.0, 7.3 - av - 2.0 * bv);
      best = std::min(best, 3.0 * av + 2.0 * bv + 0.5 * tv);
    }
  CHECK(sol.objective == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("identical models produce identical solutions and node counts") {
  auto make = [] {
    Model m;
    RngStream rng(99, 3);
    for (int j = 0; j < 14; ++j) {
      int x = m.add_binary("x" + std::to_string(j));
      m.add_objective(x, std::floor(rng.next_double() * 19.0) - 9.0);
    }
    for (int r = 0; r < 4; ++r) {
      LinExpr row;
      for (int j = 0; j < 14; ++j) {
        double c = std::floor(rng.next_double() * 7.0) - 3.0;
        if (c != 0.0) row.push_back({j, c});
      }
      m.add_constraint("", row, r % 2 ? Sense::ge : Sense::le,
                       std::floor(rng.next_double() * 9.0) - 2.0);
    }
    return m;
  };
  Solution s1 = solve(make());
  Solution s2 = solve(make());
  CHECK(s1.status == s2.status);
  CHECK(s1.node_count == s2.node_count);
  if (s1.status == SolveStatus::optimal) {
    CHECK(s1.objective == s2.objective);
    CHECK(s1.values == s2.values);
  }
}

TEST_CASE("optimal solutions satisfy every constraint within tolerance") {
  RngStream rng(4, 9);
  for (int round = 0; round < 20; ++round) {
    Model m;
    int n = 6 + static_cast<int>(rng.next_double() * 6.0);
    for (int j = 0; j < n; ++j) {
      int x = j % 3 == 2 ? m.add_continuous("c" + std::to_string(j), 0.0, 10.0)
                         : m.add_binary("x" + std::to_string(j));
      m.add_objective(x, std::floor(rng.next_double() * 9.0) - 4.0);
    }
    for (int r = 0; r < 5; ++r) {
      LinExpr row;
      for (int j = 0; j < n; ++j) {
        double c = std::floor(rng.next_double() * 5.0) - 2.0;
        if (c != 0.0) row.push_back({j, c});
      }
      if (row.empty()) continue;
      m.add_constraint("", row, Sense::le, 2.0 + std::floor(rng.next_double() * 8.0));
    }
    Solution sol = solve(m);
    if (sol.status != SolveStatus::optimal) continue;
    for (int i = 0; i < m.num_constraints(); ++i) {
      const Constraint& c = m.constraint(i);
      double lhs = 0.0;
      for (auto [j, a] : c.coeffs) lhs += a * sol.values[j];
      if (c.sense == Sense::le) CHECK(lhs <= c.rhs + 1e-6);
      if (c.sense == Sense::ge) CHECK(lhs >= c.rhs - 1e-6);
      if (c.sense == Sense::eq) CHECK(std::abs(lhs - c.rhs) <= 1e-6);
    }
    for (int j = 0; j < n; ++j)
      if (m.variable(j).kind != VarKind::continuous)
        CHECK(std::abs(sol.values[j] - std::round(sol.values[j])) <= 1e-6);
  }
}

TEST_CASE("lp export and import round-trip the model") {
  Model m;
  int x = m.add_binary("pick me");
  int y = m.add_integer("y", 7.0);
  int t = m.add_continuous("t", -2.0, 5.5);
  m.add_objective(x, 2.5);
  m.add_objective(y, -1.0);
  m.add_objective(t, 0.25);
  m.add_constraint("c0", {{x, 1.0}, {y, 2.0}}, Sense::le, 6.0);
  m.add_constraint("c1", {{y, 1.0}, {t, -1.0}}, Sense::ge, -1.5);
  m.add_constraint("c2", {{x, 3.0}, {t, 1.0}}, Sense::eq, 2.0);
  std::ostringstream out;
  export_lp(m, out);
  std::istringstream in(out.str());
  Model r = import_lp(in);
  REQUIRE(r.num_variables() == m.num_variables());
  REQUIRE(r.num_constraints() == m.num_constraints());
  for (int i = 0; i < m.num_constraints(); ++i) {
    CHECK(r.constraint(i).sense == m.constraint(i).sense);
    CHECK(r.constraint(i).rhs == doctest::Approx(m.constraint(i).rhs));
    REQUIRE(r.constraint(i).coeffs.size() == m.constraint(i).coeffs.size());
    for (std::size_t k = 0; k < m.constraint(i).coeffs.size(); ++k) {
      CHECK(r.constraint(i).coeffs[k].first == m.constraint(i).coeffs[k].first);
      CHECK(r.constraint(i).coeffs[k].second ==
            doctest::Approx(m.constraint(i).coeffs[k].second));
    }
  }
  Solution s1 = solve(m), s2 = solve(r);
  REQUIRE(s1.status == SolveStatus::optimal);
  REQUIRE(s2.status == SolveStatus::optimal);
  CHECK(s1.objective == doctest::Approx(s2.objective).epsilon(1e-9));
  // kinds and bounds survive
  CHECK(r.variable(0).kind == VarKind::binary);
  CHECK(r.variable(1).kind == VarKind::integer);
  CHECK(r.variable(2).lb == doctest::Approx(-2.0));
  CHECK(r.variable(2).ub == doctest::Approx(5.5));
}

TEST_CASE("reserved characters in names are sanitized deterministically") {
  Model m;
  m.add_binary("a+b");
  m.add_binary("a b");
  m.add_objective(0, 1.0);
  m.add_objective(1, 1.0);
  m.add_constraint("", {{0, 1.0}, {1, 1.0}}, Sense::ge, 1.0);
  std::ostringstream o1, o2;
  export_lp(m, o1);
  export_lp(m, o2);
  CHECK(o1.str() == o2.str());
  CHECK(o1.str().find("a_b") != std::string::npos);
  std::istringstream in(o1.str());
  Model r = import_lp(in);
  CHECK(r.num_variables() == 2);
}
