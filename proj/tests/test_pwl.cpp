#include <doctest.h>

#include <cmath>
#include <map>

#include "rgp/pwl.hpp"

using namespace rgp;

TEST_SUITE_BEGIN("pwl");

TEST_CASE("softplus is accurate and overflow-safe") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(softplus(-800.0) == 0.0);
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(3.0) == doctest::Approx(std::log1p(std::exp(3.0))).epsilon(1e-15));
  CHECK(softplusPrime(0.0) == doctest::Approx(0.5));
  CHECK(softplusPrime(-800.0) == doctest::Approx(0.0));
  CHECK(softplusPrime(800.0) == doctest::Approx(1.0));
  // Derivative sanity against a central difference.
  for (double x : {-5.0, -1.0, 0.3, 2.0, 10.0}) {
    const double h = 1e-6;
    const double fd = (softplus(x + h) - softplus(x - h)) / (2 * h);
    CHECK(softplusPrime(x) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("minimal errors match the reference table") {
  const std::map<int, double> table = {
      {2, 0.69314718055994529},    {3, 0.22314355131420971},
      {4, 0.10936059516871012},    {5, 0.064813307962735267},
      {6, 0.042853229868762284},   {7, 0.030428960303485131},
      {8, 0.022720707323655498},   {10, 0.014049873492479537},
      {20, 0.0032866946532590369}, {31, 0.0013370952574907058},
      {40, 0.00079569377567922928},{60, 0.00034992824056545579},
      {79, 0.0002008323885225316}, {100, 0.00012492155668186733}};
  for (const auto& [r, eps] : table) {
    const PwlApprox& p = buildPwl(r);
    CHECK(p.r == r);
    CHECK(p.eps == doctest::Approx(eps).epsilon(1e-12));
  }
}

TEST_CASE("error decreases strictly with r") {
  double prev = buildPwl(2).eps;
  for (int r = 3; r <= 60; ++r) {
    const double eps = buildPwl(r).eps;
    CHECK(eps < prev);
    prev = eps;
  }
}

TEST_CASE("piece layout invariants") {
  for (int r : {2, 3, 5, 11, 40}) {
    const PwlApprox& p = buildPwl(r);
    REQUIRE(static_cast<int>(p.slope.size()) == r);
    REQUIRE(static_cast<int>(p.offset.size()) == r);
    REQUIRE(static_cast<int>(p.breaks.size()) == r - 1);
    CHECK(p.slope.front() == 0.0);
    CHECK(p.offset.front() == 0.0);
    CHECK(p.slope.back() == 1.0);
    CHECK(p.offset.back() == 0.0);
    for (int i = 1; i < r; ++i) CHECK(p.slope[i] > p.slope[i - 1]);
    for (int i = 1; i < r - 1; ++i) CHECK(p.breaks[i] > p.breaks[i - 1]);
    // Adjacent pieces intersect at the recorded break.
    for (int i = 0; i + 1 < r; ++i) {
      const double x = p.breaks[i];
      CHECK(p.slope[i] * x + p.offset[i] ==
            doctest::Approx(p.slope[i + 1] * x + p.offset[i + 1]).epsilon(1e-9));
    }
  }
}

TEST_CASE("five-piece approximation in detail") {
  const PwlApprox& p = buildPwl(5);
  CHECK(p.eps == doctest::Approx(0.064813307962735267).epsilon(1e-12));
  REQUIRE(p.tangents.size() == 3);  // interior tangent pieces only
  for (double xt : p.tangents) {
    // A tangent piece touches softplus exactly at its abscissa.
    bool touched = false;
    for (int i = 1; i < p.r - 1; ++i)
      if (std::abs(p.slope[i] * xt + p.offset[i] - softplus(xt)) < 1e-9)
        touched = true;
    CHECK(touched);
  }
}

TEST_CASE("sandwich property on a dense grid") {
  for (int r : {2, 3, 7, 20}) {
    const PwlApprox& p = buildPwl(r);
    for (int i = 0; i <= 2000; ++i) {
      const double x = -40.0 + i * (80.0 / 2000);
      const double lower = p.eval(x);
      const double phi = softplus(x);
      CHECK(lower <= phi + 1e-12);
      CHECK(phi <= lower + p.eps + 1e-12);
    }
  }
}

TEST_CASE("two pieces are the zero and identity envelopes") {
  const PwlApprox& p = buildPwl(2);
  CHECK(p.eps == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(p.eval(-3.0) == 0.0);
  CHECK(p.eval(3.0) == 3.0);
  CHECK(p.breaks[0] == 0.0);
}

TEST_CASE("invalid piece counts are rejected") {
  CHECK_THROWS_AS(buildPwl(1), std::invalid_argument);
  CHECK_THROWS_AS(buildPwl(0), std::invalid_argument);
  CHECK_THROWS_AS(buildPwl(-2), std::invalid_argument);
}

TEST_CASE("two-term robustification emits r rows per certain block") {
  // log(e^{x} + e^{-x}) <= 0 with no uncertainty: r plain linear rows.
  AffineData y1, y2;
  y1.a0.add(0, 1.0);
  y2.a0.add(0, -1.0);
  const PerturbationSet set = PerturbationSet::box(0, 1.0);
  const int r = 6;
  const RobustLinearResult safe = robustifyTwoTerm(y1, y2, -1, set, r, true);
  REQUIRE(static_cast<int>(safe.linear.size()) == r);
  CHECK(safe.soc.empty());

  // The safe rows must dominate softplus-form feasibility: at any x where
  // all rows hold, log(e^{y1} + e^{y2}) <= 0 holds exactly.
  const RobustLinearResult relaxed = robustifyTwoTerm(y1, y2, -1, set, r, false);
  auto worst = [](const RobustLinearResult& rr, const Vec& x) {
    double w = -1e300;
    for (const auto& lc : rr.linear) w = std::max(w, lc.eval(x));
    return w;
  };
  for (double xv = -2.0; xv <= 2.0; xv += 0.05) {
    Vec x(1);
    x << xv;
    const double exact = std::log(std::exp(xv) + std::exp(-xv));
    // relaxed = max over pieces of the PWL lower bound; safe adds eps.
    CHECK(worst(relaxed, x) <= exact + 1e-12);
    CHECK(worst(safe, x) >= exact - 1e-12);
    CHECK(worst(safe, x) - worst(relaxed, x) ==
          doctest::Approx(buildPwl(r).eps).epsilon(1e-12));
  }
}

TEST_CASE("two-term robustification carries the rhs variable") {
  AffineData y1, y2;
  y1.a0.add(0, 1.0);
  y2.b0 = 0.0;
  const RobustLinearResult rr =
      robustifyTwoTerm(y1, y2, 1, PerturbationSet::box(0, 1.0), 3, true);
  for (const auto& lc : rr.linear) CHECK(lc.a.get(1) == -1.0);
}

TEST_CASE("uncertain two-term blocks robustify each piece") {
  AffineData y1, y2;
  y1.a0.add(0, 1.0);
  y1.bCols.add(0, 0.3);
  y2.a0.add(0, -1.0);
  y2.bCols.add(1, -0.2);
  const int r = 4;
  const PerturbationSet box = PerturbationSet::box(2, 1.0);
  const RobustLinearResult rb = robustifyTwoTerm(y1, y2, -1, box, r, true);
  REQUIRE(static_cast<int>(rb.linear.size()) == r);
  // Each piece folds its own margin: gamma * (w1 |0.3| + w2 |0.2|).
  const PwlApprox& p = buildPwl(r);
  for (int i = 0; i < r; ++i) {
    const double w2 = p.slope[i];
    const double expected = (1 - w2) * 0.3 + w2 * 0.2;
    const double margin = rb.linear[i].b - (p.offset[i] + p.eps);
    CHECK(margin == doctest::Approx(expected).epsilon(1e-12));
  }

  const PerturbationSet ell = PerturbationSet::elliptical(2, 1.0);
  const RobustLinearResult re = robustifyTwoTerm(y1, y2, -1, ell, r, true);
  for (int i = 0; i < r; ++i) {
    const double w2 = p.slope[i];
    const double expected = std::hypot((1 - w2) * 0.3, w2 * 0.2);
    const double margin = re.linear[i].b - (p.offset[i] + p.eps);
    CHECK(margin == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("gap check") {
  CHECK(gapCheck(1.1, 1.0) == doctest::Approx(0.1));
  CHECK(gapCheck(2.0, 2.0) == 0.0);
  CHECK_THROWS_AS(gapCheck(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gapCheck(1.0, -2.0), std::invalid_argument);
  CHECK_THROWS_AS(gapCheck(std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gapCheck(std::numeric_limits<double>::infinity(), 1.0),
                  std::invalid_argument);
}

TEST_SUITE_END();
