#include <doctest.h>

#include "rgp/partition.hpp"

using namespace rgp;

namespace {

Monomial term(std::vector<std::pair<int, double>> bCols) {
  Monomial m;
  m.a.add(0, 1.0);
  for (auto [l, v] : bCols) m.pert.bCols.add(l, v);
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("partition");

TEST_CASE("dependency edges follow shared coordinates") {
  Posynomial p;
  p.terms = {term({{0, 1.0}}), term({{0, -0.5}, {1, 1.0}}), term({{2, 1.0}}),
             term({})};
  const DependencyGraph g = buildDependencyGraph(p);
  CHECK(g.K == 4);
  CHECK(g.hasEdge(0, 1));
  CHECK(g.hasEdge(1, 0));
  CHECK_FALSE(g.hasEdge(0, 2));
  CHECK_FALSE(g.hasEdge(0, 3));
  CHECK_FALSE(g.hasEdge(2, 3));
}

TEST_CASE("exponent columns also couple terms") {
  Monomial t0, t1;
  t0.a.add(0, 1.0);
  SparseRow col;
  col.add(0, 2.0);
  t0.pert.aCols.emplace_back(5, col);
  t1.a.add(0, 2.0);
  t1.pert.bCols.add(5, 1.0);
  const DependencyGraph g = buildDependencyGraph(Posynomial({t0, t1}));
  CHECK(g.hasEdge(0, 1));
}

TEST_CASE("partition merges transitively") {
  // 0-1 share coord 0, 1-2 share coord 1: one class {0,1,2}; 3 alone.
  Posynomial p;
  p.terms = {term({{0, 1.0}}), term({{0, 1.0}, {1, 1.0}}), term({{1, 1.0}}),
             term({{7, 1.0}})};
  const auto classes = partitionPosynomial(p);
  REQUIRE(classes.size() == 2);
  CHECK(classes[0] == std::vector<int>{0, 1, 2});
  CHECK(classes[1] == std::vector<int>{3});
}

TEST_CASE("certain terms are singleton classes") {
  Posynomial p;
  p.terms = {term({}), term({}), term({})};
  const auto classes = partitionPosynomial(p);
  CHECK(classes.size() == 3);
}

TEST_CASE("consistent dependence requires one sign per coordinate") {
  Posynomial p;
  p.terms = {term({{0, 1.0}}), term({{0, 2.0}}), term({{0, -1.0}})};
  CHECK(consistentDependence(p, {0, 1}));
  CHECK_FALSE(consistentDependence(p, {0, 2}));
  CHECK(consistentDependence(p, {2}));
}

TEST_CASE("exponent uncertainty breaks consistency") {
  Monomial t;
  t.a.add(0, 1.0);
  SparseRow col;
  col.add(0, 1.0);
  t.pert.aCols.emplace_back(0, col);
  Posynomial p({t});
  CHECK_FALSE(consistentDependence(p, {0}));
}

namespace {

GeometricProgram mixedProgram() {
  GeometricProgram gp;
  gp.addVar("x");
  Monomial obj;
  obj.a.add(0, 1.0);
  gp.objective = Posynomial({obj});

  // Posy 0: K = 4 splitting into classes {0,1}, {2}, {3}.
  Posynomial p0;
  p0.terms = {term({{0, 1.0}}), term({{0, 0.5}}), term({{1, -1.0}}), term({})};
  gp.inequalities.push_back(p0);

  // Posy 1: K = 3 fully coupled through coord 2.
  Posynomial p1;
  p1.terms = {term({{2, 1.0}}), term({{2, 1.0}}), term({{2, 0.3}})};
  gp.inequalities.push_back(p1);

  // Posy 2: a lone monomial.
  gp.inequalities.push_back(Posynomial({term({})}));
  return gp;
}

}  // namespace

TEST_CASE("categorize labels classes and allocates epigraph variables") {
  const GeometricProgram gp = mixedProgram();
  const CategorizedProgram cat = categorize(gp);

  CHECK(cat.baseVars == 1);
  REQUIRE(cat.posynomials.size() == 3);

  const CategorizedPosynomial& c0 = cat.posynomials[0];
  CHECK(c0.source == 0);
  REQUIRE(c0.classes.size() == 3);
  CHECK(c0.classes[0].cat == ClassCat::N);
  CHECK(c0.classes[1].cat == ClassCat::M);
  CHECK(c0.classes[2].cat == ClassCat::M);
  // Split posynomial: every class owns an epigraph variable.
  for (const auto& tc : c0.classes) CHECK(tc.tVar >= cat.baseVars);
  CHECK(c0.classes[0].uncertainCount == 2);
  CHECK(c0.classes[2].uncertainCount == 0);
  CHECK(c0.classes[0].consistent);

  // Single-class posynomials inherit the 1-bound: no epigraph variable.
  const CategorizedPosynomial& c1 = cat.posynomials[1];
  REQUIRE(c1.classes.size() == 1);
  CHECK(c1.classes[0].cat == ClassCat::P);
  CHECK(c1.classes[0].tVar == -1);
  CHECK(c1.classes[0].members == std::vector<int>{0, 1, 2});

  const CategorizedPosynomial& c2 = cat.posynomials[2];
  REQUIRE(c2.classes.size() == 1);
  CHECK(c2.classes[0].tVar == -1);

  CHECK(cat.countM == 3);
  CHECK(cat.countN == 1);
  CHECK(cat.countP == 1);

  // Three new variables for the three classes of posynomial 0.
  CHECK(cat.gp.numVars == cat.baseVars + 3);
  CHECK(cat.gp.varNames.size() == static_cast<std::size_t>(cat.gp.numVars));
}

TEST_CASE("class members cover all terms exactly once") {
  const CategorizedProgram cat = categorize(mixedProgram());
  for (std::size_t i = 0; i < cat.posynomials.size(); ++i) {
    std::vector<bool> seen(cat.gp.inequalities[i].K(), false);
    for (const auto& tc : cat.posynomials[i].classes)
      for (int k : tc.members) {
        CHECK_FALSE(seen[static_cast<std::size_t>(k)]);
        seen[static_cast<std::size_t>(k)] = true;
      }
    for (bool b : seen) CHECK(b);
  }
}

TEST_CASE("mixed-sign coupling is flagged inconsistent") {
  GeometricProgram gp;
  gp.addVar("x");
  Monomial obj;
  obj.a.add(0, 1.0);
  gp.objective = Posynomial({obj});
  Posynomial p;
  p.terms = {term({{0, 1.0}}), term({{0, -1.0}})};
  gp.inequalities.push_back(p);

  const CategorizedProgram cat = categorize(gp);
  REQUIRE(cat.posynomials[0].classes.size() == 1);
  CHECK_FALSE(cat.posynomials[0].classes[0].consistent);
  CHECK(cat.posynomials[0].classes[0].uncertainCount == 2);
}

TEST_SUITE_END();
