#include <doctest.h>

#include <cmath>

#include "rgp/solver.hpp"

using namespace rgp;

namespace {

// min x  s.t.  x >= 1, in log space: cost x, -x + 0 <= 0.
ConvexProgram boundedLine() {
  ConvexProgram p;
  p.numVars = 1;
  p.cost.add(0, 1.0);
  p.linear.push_back({SparseRow{{0, -1.0}}, 0.0});
  return p;
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("status names") {
  CHECK(statusName(SolveStatus::Optimal) == "optimal");
  CHECK(statusName(SolveStatus::Infeasible) == "infeasible");
  CHECK(statusName(SolveStatus::MaxIterations) == "max-iterations");
  CHECK(statusName(SolveStatus::NumericalFailure) == "numerical-failure");
}

TEST_CASE("single linear bound") {
  const SolveResult res = solveConvex(boundedLine());
  REQUIRE(res.ok());
  CHECK(res.logObjective == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.maxViolation <= 1e-8);
  CHECK(res.iterations > 0);
}

TEST_CASE("separable linear program") {
  // min 1/(x y)  s.t.  x <= 2, y <= 3 : optimum 1/6 at the upper corners.
  ConvexProgram p;
  p.numVars = 2;
  p.cost.add(0, -1.0);
  p.cost.add(1, -1.0);
  p.linear.push_back({SparseRow{{0, 1.0}}, -std::log(2.0)});
  p.linear.push_back({SparseRow{{1, 1.0}}, -std::log(3.0)});
  const SolveResult res = solveConvex(p);
  REQUIRE(res.ok());
  CHECK(res.logObjective == doctest::Approx(-std::log(6.0)).epsilon(1e-8));
  CHECK(res.x[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("log-sum-exp constraint") {
  // min t  s.t.  log(e^{x-t} + e^{-x-t}) <= 0 : t* = log 2 at x = 0.
  ConvexProgram p;
  p.numVars = 2;
  p.cost.add(1, 1.0);
  LseCon c;
  c.terms.emplace_back(SparseRow{{0, 1.0}, {1, -1.0}}, 0.0);
  c.terms.emplace_back(SparseRow{{0, -1.0}, {1, -1.0}}, 0.0);
  p.lse.push_back(c);
  const SolveResult res = solveConvex(p);
  REQUIRE(res.ok());
  CHECK(res.logObjective == doctest::Approx(std::log(2.0)).epsilon(1e-8));
  CHECK(res.x[0] == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("second-order cone constraint") {
  // min x  s.t.  sqrt(y^2 + 1) <= x : optimum x = 1 at y = 0.
  ConvexProgram p;
  p.numVars = 2;
  p.cost.add(0, 1.0);
  SocCon soc;
  soc.norm.push_back({SparseRow{{1, 1.0}}, 0.0});
  soc.norm.push_back({SparseRow{}, 1.0});
  soc.affine = {SparseRow{{0, -1.0}}, 0.0};
  p.soc.push_back(soc);
  const SolveResult res = solveConvex(p);
  REQUIRE(res.ok());
  CHECK(res.logObjective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.x[1] == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("infeasible bounds are certified") {
  // x <= -1 and x >= 1.
  ConvexProgram p;
  p.numVars = 1;
  p.cost.add(0, 1.0);
  p.linear.push_back({SparseRow{{0, 1.0}}, 1.0});
  p.linear.push_back({SparseRow{{0, -1.0}}, 1.0});
  const SolveResult res = solveConvex(p);
  CHECK(res.status == SolveStatus::Infeasible);
  CHECK(res.maxViolation > 0.5);
}

TEST_CASE("empty interior is a numerical failure, not an answer") {
  // x <= 0 and x >= 0 pins the only feasible point; the barrier needs an
  // interior, so this must be reported as a failure rather than Optimal.
  ConvexProgram p;
  p.numVars = 1;
  p.cost.add(0, 1.0);
  p.linear.push_back({SparseRow{{0, 1.0}}, 0.0});
  p.linear.push_back({SparseRow{{0, -1.0}}, 0.0});
  const SolveResult res = solveConvex(p);
  CHECK(res.status == SolveStatus::NumericalFailure);
}

TEST_CASE("empty program is trivially optimal") {
  ConvexProgram p;
  const SolveResult res = solveConvex(p);
  CHECK(res.ok());

  ConvexProgram unbounded;
  unbounded.numVars = 1;
  unbounded.cost.add(0, 1.0);
  CHECK(solveConvex(unbounded).status == SolveStatus::NumericalFailure);
}

TEST_CASE("tiny Newton budget fails loudly") {
  SolverOptions opts;
  opts.maxNewton = 2;
  const SolveResult res = solveConvex(boundedLine(), opts);
  CHECK_FALSE(res.ok());
}

TEST_CASE("solves are deterministic") {
  ConvexProgram p;
  p.numVars = 2;
  p.cost.add(0, -1.0);
  p.cost.add(1, -2.0);
  LseCon c;
  c.terms.emplace_back(SparseRow{{0, 2.0}}, 0.1);
  c.terms.emplace_back(SparseRow{{1, 1.0}}, -0.3);
  p.lse.push_back(c);
  const SolveResult r1 = solveConvex(p);
  const SolveResult r2 = solveConvex(p);
  REQUIRE(r1.ok());
  CHECK(r1.iterations == r2.iterations);
  CHECK(r1.x == r2.x);  // bitwise: no randomness anywhere in the path
  CHECK(r1.logObjective == r2.logObjective);
}

TEST_CASE("maxViolation measures the worst constraint") {
  const ConvexProgram p = boundedLine();
  Vec x(1);
  x << 1.0;
  CHECK(maxViolation(p, x) == 0.0);
  x << -2.0;
  CHECK(maxViolation(p, x) == doctest::Approx(2.0));
}

TEST_CASE("geometric program conversion") {
  GeometricProgram gp;
  const int x = gp.addVar("x");
  const int y = gp.addVar("y");
  Monomial obj;
  obj.a.add(x, 1.0);
  obj.a.add(y, 1.0);
  gp.objective = Posynomial({obj});

  Monomial mono;  // 2 / (x y) <= 1
  mono.a.add(x, -1.0);
  mono.a.add(y, -1.0);
  mono.b = std::log(2.0);
  gp.inequalities.push_back(Posynomial({mono}));

  Monomial t1, t2;  // x/4 + y/4 <= 1
  t1.a.add(x, 1.0);
  t1.b = -std::log(4.0);
  t2.a.add(y, 1.0);
  t2.b = -std::log(4.0);
  gp.inequalities.push_back(Posynomial({t1, t2}));

  const ConvexProgram p = toConvexProgram(gp);
  CHECK(p.numVars == 2);
  CHECK(p.linear.size() == 1);
  CHECK(p.lse.size() == 1);
  CHECK(p.soc.empty());

  const SolveResult res = solveConvex(p);
  REQUIRE(res.ok());
  // Symmetric optimum at x = y = sqrt(2): objective 2.
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-7));

  GeometricProgram uncertain = gp;
  uncertain.inequalities[0].terms[0].pert.bCols.add(0, 1.0);
  CHECK_THROWS_AS(toConvexProgram(uncertain), std::invalid_argument);

  GeometricProgram withEq = gp;
  withEq.equalities.push_back(mono);
  CHECK_THROWS_AS(toConvexProgram(withEq), std::invalid_argument);

  GeometricProgram posyObj = gp;
  posyObj.objective = Posynomial({t1, t2});
  CHECK_THROWS_AS(toConvexProgram(posyObj), std::invalid_argument);
}

namespace {

GeometricProgram productFloor() {
  // min x y  s.t.  x y >= 2.
  GeometricProgram gp;
  const int x = gp.addVar("x");
  const int y = gp.addVar("y");
  Monomial obj;
  obj.a.add(x, 1.0);
  obj.a.add(y, 1.0);
  gp.objective = Posynomial({obj});
  Monomial floor;
  floor.a.add(x, -1.0);
  floor.a.add(y, -1.0);
  floor.b = std::log(2.0);
  gp.inequalities.push_back(Posynomial({floor}));
  return gp;
}

}  // namespace

TEST_CASE("fixAndSolve folds fixed variables into constants") {
  const GeometricProgram gp = productFloor();
  const SolveResult res = fixAndSolve(gp, {{0, std::log(4.0)}});
  REQUIRE(res.ok());
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(res.x.size() == 2);
  CHECK(res.x[0] == std::log(4.0));
  CHECK(res.x[1] == doctest::Approx(std::log(0.5)).epsilon(1e-6));
}

TEST_CASE("fixAndSolve catches violated fixings") {
  GeometricProgram gp = productFloor();
  Monomial cap;  // x <= 1
  cap.a.add(0, 1.0);
  gp.inequalities.push_back(Posynomial({cap}));
  const SolveResult res = fixAndSolve(gp, {{0, std::log(4.0)}});
  CHECK(res.status == SolveStatus::Infeasible);

  CHECK_THROWS_AS(fixAndSolve(gp, {{7, 0.0}}), std::out_of_range);

  GeometricProgram uncertain = gp;
  uncertain.inequalities[0].terms[0].pert.bCols.add(0, 1.0);
  CHECK_THROWS_AS(fixAndSolve(uncertain, {{0, 0.0}}), std::invalid_argument);
}

TEST_CASE("fixAndSolve with every variable fixed") {
  const GeometricProgram gp = productFloor();
  const SolveResult res =
      fixAndSolve(gp, {{0, std::log(2.0)}, {1, std::log(3.0)}});
  REQUIRE(res.ok());
  CHECK(res.objective == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("sequential solve of a signomial program") {
  // min x  s.t.  x >= 4  and  6 <= x + 8/x. The reverse inequality makes the
  // second constraint signomial; the optimum sits at x = 4.
  ConvexProgram base;
  base.numVars = 1;
  base.cost.add(0, 1.0);
  base.linear.push_back({SparseRow{{0, -1.0}}, std::log(4.0)});

  SignomialConstraint sig;
  Monomial six;
  six.b = std::log(6.0);
  sig.lhs = Posynomial({six});
  Monomial up, down;
  up.a.add(0, 1.0);
  down.a.add(0, -1.0);
  down.b = std::log(8.0);
  sig.rhs = Posynomial({up, down});

  Vec start(1);
  start << std::log(5.0);
  const SignomialResult out = solveSignomial(base, {sig}, {"x"}, &start);
  REQUIRE(out.result.ok());
  CHECK(out.result.objective == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(out.outerIterations >= 1);
  REQUIRE_FALSE(out.trace.empty());
  for (std::size_t i = 1; i < out.trace.size(); ++i)
    CHECK(out.trace[i] <= out.trace[i - 1] * (1 + 1e-9));
}

TEST_CASE("signomial solve without signomials is a plain solve") {
  const SignomialResult out = solveSignomial(boundedLine(), {}, {"x"});
  REQUIRE(out.result.ok());
  CHECK(out.result.objective == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(out.outerIterations == 0);

  SignomialConstraint empty;
  CHECK_THROWS_AS(solveSignomial(boundedLine(), {empty}, {"x"}),
                  std::invalid_argument);
}

TEST_SUITE_END();
