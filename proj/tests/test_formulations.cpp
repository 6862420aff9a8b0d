#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "rgp/formulations.hpp"
#include "rgp/models.hpp"
#include "rgp/simulate.hpp"

using namespace rgp;

namespace {

Monomial term(double aExp, double b, std::vector<std::pair<int, double>> bCols) {
  Monomial m;
  if (aExp != 0.0) m.a.add(0, aExp);
  m.b = b;
  for (auto [l, v] : bCols) m.pert.bCols.add(l, v);
  return m;
}

// min x with one uncertain posynomial in x; objective already a bare variable.
GeometricProgram oneConstraint(Posynomial p) {
  GeometricProgram gp;
  gp.addVar("x");
  Monomial obj;
  obj.a.add(0, 1.0);
  gp.objective = Posynomial({obj});
  gp.inequalities.push_back(std::move(p));
  return gp;
}

CategorizedProgram catOf(const GeometricProgram& gp) {
  return categorize(toEpigraphForm(toInequalityForm(gp)));
}

// Four-term posynomial forming a single inconsistent class: both exponent
// signs of x appear so the feasible x range is an interval.
GeometricProgram coupledQuad() {
  Posynomial p;
  p.terms = {term(1.0, std::log(0.2), {{0, 0.3}}),
             term(-1.0, std::log(0.2), {{0, -0.3}}),
             term(0.5, std::log(0.15), {{0, 0.1}, {1, 0.2}}),
             term(-0.5, std::log(0.15), {{1, -0.2}})};
  return oneConstraint(std::move(p));
}

double nominalObjective(const GeometricProgram& gp) {
  const SolveResult res =
      solveConvex(toConvexProgram(toEpigraphForm(toInequalityForm(gp))));
  REQUIRE(res.ok());
  return res.objective;
}

bool robustFeasible(const GeometricProgram& gp, const Vec& x,
                    const PerturbationSet& set, int nSamples,
                    std::uint64_t seed) {
  SampleRng root(seed);
  for (int i = 0; i < nSamples; ++i) {
    SampleRng rng = root.fork(static_cast<std::uint64_t>(i));
    const Vec zeta = samplePerturbation(set, rng);
    for (const auto& posy : gp.inequalities) {
      Posynomial real;
      for (const auto& t : posy.terms) real.terms.push_back(realize(t, zeta));
      if (evalPosynomial(real, x) > 1.0 + 1e-6) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("formulations");

TEST_CASE("half-space anchors") {
  const HalfSpace h1 = buildHalfSpace({{0, std::log(2.0)}});
  REQUIRE(h1.f.size() == 1);
  CHECK(h1.f[0].second == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(h1.g == doctest::Approx(1.25).epsilon(1e-12));

  const HalfSpace h2 = buildHalfSpace({{0, std::log(2.0)}, {1, std::log(2.0)}});
  REQUIRE(h2.f.size() == 2);
  CHECK(h2.f[0].second == doctest::Approx(0.9375).epsilon(1e-12));
  CHECK(h2.f[1].second == doctest::Approx(0.9375).epsilon(1e-12));
  CHECK(h2.g == doctest::Approx(2.125).epsilon(1e-12));

  // Slope sign follows the column sign.
  const HalfSpace hn = buildHalfSpace({{0, -std::log(2.0)}});
  CHECK(hn.f[0].second == doctest::Approx(-0.75).epsilon(1e-12));
  CHECK(hn.g == doctest::Approx(1.25).epsilon(1e-12));

  const HalfSpace empty = buildHalfSpace({});
  CHECK(empty.f.empty());
  CHECK(empty.g == 1.0);
}

TEST_CASE("half-space dominates every vertex") {
  SampleRng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int s = 1 + static_cast<int>(rng.uniform01() * 6);
    std::vector<std::pair<int, double>> cols;
    for (int j = 0; j < s; ++j) cols.emplace_back(j, 1.6 * rng.uniform01() - 0.8);
    const HalfSpace hs = buildHalfSpace(cols);
    double minSlack = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (1ULL << s); ++mask) {
      double plane = hs.g, e = 0.0;
      for (int j = 0; j < s; ++j) {
        const double sign = (mask >> j) & 1 ? 1.0 : -1.0;
        e += sign * cols[static_cast<std::size_t>(j)].second;
        for (const auto& [l, f] : hs.f)
          if (l == j) plane += sign * f;
      }
      CHECK(plane >= std::exp(e) - 1e-9);
      minSlack = std::min(minSlack, plane - std::exp(e));
    }
    // Interpolation (or the certifying lift) leaves some vertex tight.
    double bAbs = 0.0;
    for (const auto& [l, b] : cols) bAbs += std::abs(b);
    CHECK(minSlack <= 1e-7 * (1.0 + std::exp(bAbs)));
  }
}

TEST_CASE("half-space falls back above 20 coordinates") {
  std::vector<std::pair<int, double>> cols;
  for (int l = 0; l < 21; ++l) cols.emplace_back(l, 0.1);
  const HalfSpace hs = buildHalfSpace(cols);
  CHECK(hs.f.empty());
  CHECK(hs.g == doctest::Approx(std::exp(2.1)).epsilon(1e-12));
}

TEST_CASE("pairing counts") {
  CHECK(pairingCount(0) == 1);
  CHECK(pairingCount(1) == 1);
  CHECK(pairingCount(2) == 1);
  CHECK(pairingCount(3) == 3);
  CHECK(pairingCount(4) == 3);
  CHECK(pairingCount(5) == 15);
  CHECK(pairingCount(6) == 15);
  CHECK(pairingCount(7) == 105);
  CHECK(pairingCount(8) == 105);
  CHECK_THROWS_AS(pairingCount(-1), std::out_of_range);
  CHECK_THROWS_AS(pairingCount(34), std::out_of_range);
}

TEST_CASE("random pairing covers heavy classes deterministically") {
  const CategorizedProgram cat = catOf(coupledQuad());
  const PerturbationSet set = PerturbationSet::box(2, 1.0);
  const Pairing p1 = randomPairing(cat, set, 3);
  const Pairing p2 = randomPairing(cat, set, 3);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0].pairs == p2[0].pairs);
  CHECK(p1[0].leftover == -1);  // even class
  REQUIRE(p1[0].pairs.size() == 2);
  std::set<int> covered;
  for (auto [i, j] : p1[0].pairs) {
    CHECK(i < j);
    covered.insert(i);
    covered.insert(j);
  }
  CHECK(covered == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("odd classes leave one term unpaired") {
  Posynomial p;
  p.terms = {term(1.0, std::log(0.2), {{0, 0.3}}),
             term(-1.0, std::log(0.2), {{0, -0.3}}),
             term(0.5, std::log(0.15), {{0, 0.1}})};
  const CategorizedProgram cat = catOf(oneConstraint(std::move(p)));
  const Pairing pairing = randomPairing(cat, PerturbationSet::box(1, 1.0), 1);
  REQUIRE(pairing.size() == 1);
  CHECK(pairing[0].pairs.size() == 1);
  CHECK(pairing[0].leftover >= 0);
  CHECK(pairing[0].leftover <= 2);
}

TEST_CASE("elliptical budgets merge uncertain classes") {
  // Two structurally independent uncertain pairs plus one certain term.
  Posynomial p;
  p.terms = {term(1.0, std::log(0.1), {{0, 0.2}}),
             term(-1.0, std::log(0.1), {{0, -0.2}}),
             term(0.5, std::log(0.1), {{1, 0.2}}),
             term(-0.5, std::log(0.1), {{1, -0.2}}),
             term(0.0, std::log(0.1), {})};
  const CategorizedProgram cat = catOf(oneConstraint(std::move(p)));
  // Box: the two pairs stay two-term classes, so nothing needs a pairing.
  CHECK(randomPairing(cat, PerturbationSet::box(2, 1.0), 0).empty());
  // Elliptical: the budget couples both pairs into one four-member class.
  const Pairing pe = randomPairing(cat, PerturbationSet::elliptical(2, 1.0), 0);
  REQUIRE(pe.size() == 1);
  CHECK(pe[0].pairs.size() == 2);
}

TEST_CASE("wing emission counts match the closed forms") {
  const WingModel wm = buildWing();
  const CategorizedProgram cat = catOf(wm.gp);
  const GeometricProgram raw = toEpigraphForm(toInequalityForm(wm.gp));
  const PerturbationSet box = PerturbationSet::box(perturbationDimension(wm.gp), 1.0);

  const RobustProgram sc = simpleConservative(cat, box);
  CHECK(sc.emittedCount == 15);
  CHECK(sc.emittedCount == countConstraints(raw, Method::SimpleConservative, 0));
  CHECK(sc.sources == 8);
  CHECK(sc.rUsed == 0);
  CHECK(sc.kind == RobustProgram::Kind::GP);
  CHECK(sc.exact);  // box + consistent dependence on every posynomial
  CHECK(sc.aux.t.size() == 7);  // one epigraph per term of the three splits
  CHECK(sc.varNames.size() == static_cast<std::size_t>(sc.program.numVars));

  const RobustProgram tt = twoTermFormulation(cat, box, 79);
  CHECK(tt.emittedCount == 321);
  CHECK(tt.emittedCount == countConstraints(raw, Method::TwoTerm, 79));
  CHECK(tt.rUsed == 79);
  CHECK_FALSE(tt.exact);
  CHECK(tt.kind == RobustProgram::Kind::GP);

  // Provenance rows track their containers entry for entry.
  CHECK(tt.provenance.linear.size() == tt.program.linear.size());
  CHECK(tt.provenance.lse.size() == tt.program.lse.size());
  CHECK(tt.provenance.soc.size() == tt.program.soc.size());
  for (int src : tt.provenance.linear) {
    CHECK(src >= 0);
    CHECK(src < tt.sources);
  }
}

TEST_CASE("certain programs keep their nominal value") {
  // min x y  s.t.  x y >= 2, x/4 + y/4 <= 1: optimum 2, no uncertainty.
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
  Monomial t1, t2;
  t1.a.add(x, 1.0);
  t1.b = -std::log(4.0);
  t2.a.add(y, 1.0);
  t2.b = -std::log(4.0);
  gp.inequalities.push_back(Posynomial({t1, t2}));

  const double nominal = nominalObjective(gp);
  CHECK(nominal == doctest::Approx(2.0).epsilon(1e-7));

  const CategorizedProgram cat = catOf(gp);
  const PerturbationSet set = PerturbationSet::box(0, 1.0);

  const RobustProgram sc = simpleConservative(cat, set);
  const SolveResult scRes = solveConvex(sc.program);
  REQUIRE(scRes.ok());
  CHECK(scRes.objective == doctest::Approx(nominal).epsilon(1e-6));
  CHECK(sc.exact);

  const RobustProgram lp = linearizedPerturbations(cat, set);
  const SolveResult lpRes = solveConvex(lp.program);
  REQUIRE(lpRes.ok());
  CHECK(lpRes.objective == doctest::Approx(nominal).epsilon(1e-6));
  CHECK(lp.exact);
  CHECK(lp.rUsed == 0);

  const BestPairsResult bp = bestPairs(cat, set);
  REQUIRE(bp.solution.ok());
  CHECK(bp.solution.objective == doctest::Approx(nominal).epsilon(1e-6));

  // Two-term still splits the LSE: safe overshoots by at most eps(r) and the
  // relaxation undershoots, so the pair brackets the nominal value.
  const RobustProgram ttSafe = twoTermFormulation(cat, set, 40, true);
  const RobustProgram ttRelax = twoTermFormulation(cat, set, 40, false);
  const SolveResult up = solveConvex(ttSafe.program);
  const SolveResult lo = solveConvex(ttRelax.program);
  REQUIRE(up.ok());
  REQUIRE(lo.ok());
  CHECK(lo.objective <= nominal * (1 + 1e-9));
  CHECK(up.objective >= nominal * (1 - 1e-9));
  CHECK(gapCheck(up.objective, lo.objective) < 2 * buildPwl(40).eps);
}

TEST_CASE("wing box orderings and reference values") {
  const WingModel wm = buildWing();
  const CategorizedProgram cat = catOf(wm.gp);
  const int L = perturbationDimension(wm.gp);
  const PerturbationSet box = PerturbationSet::box(L, 1.0);

  const SolveResult sc = solveConvex(simpleConservative(cat, box).program);
  REQUIRE(sc.ok());
  CHECK(sc.objective == doctest::Approx(1931.5299116361325).epsilon(1e-8));

  const SolveResult lp =
      solveConvex(linearizedPerturbations(cat, box, 40).program);
  REQUIRE(lp.ok());
  const BestPairsResult bp = [&] {
    BestPairsOptions bo;
    bo.r = 40;
    return bestPairs(cat, box, bo);
  }();
  REQUIRE(bp.solution.ok());
  const SolveResult tt = solveConvex(twoTermFormulation(cat, box, 40).program);
  REQUIRE(tt.ok());

  // Box + consistent dependence: the class-wise methods are all exact, so
  // they agree; the two-term chain may only be more conservative.
  CHECK(lp.objective == doctest::Approx(sc.objective).epsilon(1e-6));
  CHECK(bp.solution.objective == doctest::Approx(sc.objective).epsilon(1e-6));
  CHECK(tt.objective >= sc.objective * (1 - 1e-9));

  const std::map<Method, double> objectives = {
      {Method::SimpleConservative, sc.objective},
      {Method::LinearizedPerturbations, lp.objective},
      {Method::TwoTerm, tt.objective},
      {Method::BestPairs, bp.solution.objective}};
  const AuditReport audit = conservativenessAudit(objectives);
  CHECK(audit.lpWithinSc);
  CHECK(audit.bpWithinTt);
  CHECK(audit.pass);
}

TEST_CASE("wing elliptical orderings") {
  const WingModel wm = buildWing();
  const CategorizedProgram cat = catOf(wm.gp);
  const int L = perturbationDimension(wm.gp);
  const PerturbationSet ell = PerturbationSet::elliptical(L, 1.0);

  const SolveResult sc = solveConvex(simpleConservative(cat, ell).program);
  REQUIRE(sc.ok());
  CHECK(sc.objective == doctest::Approx(1383.4275083780913).epsilon(1e-8));

  const SolveResult lp =
      solveConvex(linearizedPerturbations(cat, ell, 40).program);
  REQUIRE(lp.ok());
  const SolveResult tt = solveConvex(twoTermFormulation(cat, ell, 40).program);
  REQUIRE(tt.ok());
  BestPairsOptions bo;
  bo.r = 40;
  const BestPairsResult bp = bestPairs(cat, ell, bo);
  REQUIRE(bp.solution.ok());

  CHECK(lp.objective <= sc.objective * (1 + 1e-4));
  CHECK(bp.solution.objective <= tt.objective * (1 + 1e-4));
  // Elliptical margins are strictly smaller than box, so every method lands
  // below its box counterpart and above the nominal optimum.
  CHECK(lp.objective > 405.44);
  CHECK(lp.objective < 1383.5);
}

TEST_CASE("best pairs descends and is reproducible") {
  const CategorizedProgram cat = catOf(coupledQuad());
  const PerturbationSet set = PerturbationSet::box(2, 1.0);
  BestPairsOptions bo;
  bo.r = 10;
  bo.maxIters = 6;
  bo.seed = 4;
  const BestPairsResult a = bestPairs(cat, set, bo);
  REQUIRE(a.solution.ok());
  CHECK_FALSE(a.solverFailed);
  CHECK(a.iterations >= 1);
  REQUIRE_FALSE(a.trace.empty());
  for (std::size_t i = 1; i < a.trace.size(); ++i)
    CHECK(a.trace[i] <= a.trace[i - 1] * (1 + 1e-9));

  const BestPairsResult b = bestPairs(cat, set, bo);
  CHECK(a.trace == b.trace);
  CHECK(a.solution.objective == b.solution.objective);

  // Re-solving the accepted pairing's program reproduces the solution.
  const RobustProgram again = bestPairsProgram(cat, set, a.pairing, bo.r);
  const SolveResult res = solveConvex(again.program);
  REQUIRE(res.ok());
  CHECK(res.objective == doctest::Approx(a.solution.objective).epsilon(1e-9));
}

TEST_CASE("robust designs survive sampling of their own set") {
  const GeometricProgram gp = coupledQuad();
  const CategorizedProgram cat = catOf(gp);
  const PerturbationSet set = PerturbationSet::box(2, 1.0);

  const RobustProgram sc = simpleConservative(cat, set);
  const SolveResult scRes = solveConvex(sc.program);
  REQUIRE(scRes.ok());
  CHECK(robustFeasible(gp, scRes.x.head(gp.numVars), set, 300, 9));

  const RobustProgram tt = twoTermFormulation(cat, set, 20, true);
  const SolveResult ttRes = solveConvex(tt.program);
  REQUIRE(ttRes.ok());
  CHECK(robustFeasible(gp, ttRes.x.head(gp.numVars), set, 300, 9));

  BestPairsOptions bo;
  bo.r = 20;
  const BestPairsResult bp = bestPairs(cat, set, bo);
  REQUIRE(bp.solution.ok());
  CHECK(robustFeasible(gp, bp.solution.x.head(gp.numVars), set, 300, 9));
}

TEST_CASE("mixed-sign half-space slopes produce a signomial program") {
  // One three-member class whose middle term carries opposite-sign columns,
  // forcing a mixed-sign fitted slope and the two signomial side constraints.
  Posynomial p;
  p.terms = {term(1.0, -1.5, {{0, 0.4}}),
             term(-1.0, -1.5, {{0, -0.3}, {1, 0.2}}),
             term(0.5, -1.7, {{1, -0.25}})};
  const GeometricProgram gp = oneConstraint(std::move(p));
  const CategorizedProgram cat = catOf(gp);
  const PerturbationSet set = PerturbationSet::box(2, 1.0);

  const RobustProgram lp = linearizedPerturbations(cat, set);
  CHECK(lp.kind == RobustProgram::Kind::Signomial);
  CHECK_FALSE(lp.signomials.empty());
  CHECK(lp.provenance.sig.size() == lp.signomials.size());
  CHECK_FALSE(lp.exact);

  // The sequential solver needs a bounded start; warm-start from the
  // conservative counterpart the way the robust driver does.
  const SolveResult scRes = solveConvex(simpleConservative(cat, set).program);
  REQUIRE(scRes.ok());
  Vec x0 = Vec::Zero(lp.program.numVars);
  const int shared = std::min<int>(scRes.x.size(), lp.program.numVars);
  x0.head(shared) = scRes.x.head(shared);
  const SignomialResult out =
      solveSignomial(lp.program, lp.signomials, lp.varNames, &x0);
  REQUIRE(out.result.ok());
  const Vec design = out.result.x.head(gp.numVars);
  CHECK(robustFeasible(gp, design, set, 300, 10));
}

TEST_CASE("elliptical exponent uncertainty yields a conic program") {
  GeometricProgram gp;
  gp.addVar("x");
  Monomial obj;
  obj.a.add(0, 1.0);
  gp.objective = Posynomial({obj});
  Monomial m;
  m.a.add(0, -1.0);
  SparseRow col;
  col.add(0, 0.2);
  m.pert.aCols.emplace_back(0, col);
  gp.inequalities.push_back(Posynomial({m}));

  const CategorizedProgram cat = catOf(gp);
  const RobustProgram sc =
      simpleConservative(cat, PerturbationSet::elliptical(1, 1.0));
  CHECK(sc.kind == RobustProgram::Kind::Conic);
  CHECK_FALSE(sc.program.soc.empty());
  const SolveResult res = solveConvex(sc.program);
  REQUIRE(res.ok());
}

TEST_CASE("audit requires all four methods") {
  std::map<Method, double> partial = {{Method::SimpleConservative, 1.0}};
  CHECK_THROWS_AS(conservativenessAudit(partial), std::invalid_argument);

  const std::map<Method, double> bad = {{Method::SimpleConservative, 1.0},
                                        {Method::LinearizedPerturbations, 1.2},
                                        {Method::TwoTerm, 1.0},
                                        {Method::BestPairs, 0.9}};
  const AuditReport rep = conservativenessAudit(bad);
  CHECK_FALSE(rep.lpWithinSc);
  CHECK(rep.bpWithinTt);
  CHECK_FALSE(rep.pass);
}

TEST_SUITE_END();
