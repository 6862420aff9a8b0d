// simulate.cpp: Monte Carlo evaluation and the gamma-sweep experiment.
#include "rgp/simulate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "rgp/pwl.hpp"

namespace rgp {

namespace {

constexpr double kZ95 = 1.959963984540054;  // Phi^-1(0.975)

std::string setName(PerturbationSet::Kind kind) {
  return kind == PerturbationSet::Kind::Box ? "box" : "elliptical";
}

PerturbationSet makeSet(PerturbationSet::Kind kind, int L, double gamma,
                        const Vec& sigma) {
  if (kind == PerturbationSet::Kind::Box) return PerturbationSet::box(L, gamma);
  return PerturbationSet::elliptical(L, gamma, sigma);
}

// Signomial-kind programs go through sequential convexification, warm
// started at the SimpleConservative solution when one is supplied.
SolveResult solveProgram(const RobustProgram& rp, const SolverOptions& opts,
                         const Vec* start = nullptr) {
  if (rp.signomials.empty()) return solveConvex(rp.program, opts);
  Vec x0;
  if (start != nullptr) {
    x0 = Vec::Zero(rp.program.numVars);
    const int shared = std::min<int>(start->size(), rp.program.numVars);
    x0.head(shared) = start->head(shared);
  }
  return solveSignomial(rp.program, rp.signomials, rp.varNames,
                        start != nullptr ? &x0 : nullptr, opts)
      .result;
}

}  // namespace

std::pair<double, double> wilsonInterval(int k, int n) {
  if (n <= 0) return {0.0, 1.0};
  const double phat = static_cast<double>(k) / n;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half =
      kZ95 * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  // center == half at k = 0 (and mirrored at k = n) up to rounding; pin the
  // exact endpoints instead of leaving a stray ulp.
  const double low = k == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = k == n ? 1.0 : std::min(1.0, center + half);
  return {low, high};
}

SimulationReport simulate(const GeometricProgram& gp, const Vec& design,
                          const PerturbationSet& set, int nSamples,
                          std::uint64_t seed, const SolverOptions& opts) {
  if (nSamples < 1) throw std::invalid_argument("simulate: nSamples must be >= 1");
  if (design.size() < gp.numVars)
    throw std::invalid_argument("simulate: design point is shorter than numVars");
  std::vector<std::pair<int, double>> fixed;
  fixed.reserve(gp.designVars.size());
  for (int v : gp.designVars) fixed.emplace_back(v, design[v]);

  SimulationReport rep;
  rep.samples = nSamples;
  rep.records.resize(static_cast<std::size_t>(nSamples));
  const SampleRng root(seed);
  double sum = 0.0;
  int feasible = 0;
  for (int i = 0; i < nSamples; ++i) {
    SampleRng rng = root.fork(static_cast<std::uint64_t>(i));
    const Vec zeta = samplePerturbation(set, rng);
    const GeometricProgram real = realize(gp, zeta);
    const SolveResult res = fixAndSolve(real, fixed, opts);
    SampleRecord& rec = rep.records[static_cast<std::size_t>(i)];
    rec.status = res.status;
    if (res.status == SolveStatus::Optimal) {
      rec.objective = res.objective;
      sum += res.objective;
      ++feasible;
    } else {
      ++rep.failures;
      if (res.status != SolveStatus::Infeasible) ++rep.numericalFailures;
    }
  }
  rep.pFail = static_cast<double>(rep.failures) / nSamples;
  std::tie(rep.pFailLow, rep.pFailHigh) = wilsonInterval(rep.failures, nSamples);
  rep.meanObjective = feasible > 0 ? sum / feasible : 0.0;
  return rep;
}

RobustSolve solveRobust(const CategorizedProgram& cat, Method method,
                        const PerturbationSet& set,
                        const std::vector<int>& rSchedule, double gapTol,
                        const SolverOptions& opts, std::uint64_t seed) {
  if (rSchedule.empty())
    throw std::invalid_argument("solveRobust: empty r schedule");

  if (method == Method::SimpleConservative) {
    RobustSolve out;
    out.program = simpleConservative(cat, set);
    out.result = solveConvex(out.program.program, opts);
    return out;
  }

  // Warm start for any signomial-kind counterpart (see solveProgram).
  Vec scStart;
  bool haveStart = false;

  RobustSolve out;
  bool any = false;
  for (int r : rSchedule) {
    RobustSolve cand;
    cand.r = r;
    SolveResult lower;
    if (method == Method::BestPairs) {
      BestPairsOptions bo;
      bo.r = r;
      bo.seed = seed;
      bo.solver = opts;
      BestPairsResult bp = bestPairs(cat, set, bo);
      cand.program = std::move(bp.program);
      cand.result = std::move(bp.solution);
      cand.pairing = std::move(bp.pairing);
      if (cand.result.ok() && cand.program.rUsed > 0) {
        RobustProgram low = bestPairsProgram(cat, set, cand.pairing, r, false);
        lower = solveConvex(low.program, opts);
      }
    } else {
      auto build = [&](bool safe) {
        return method == Method::TwoTerm
                   ? twoTermFormulation(cat, set, r, safe)
                   : linearizedPerturbations(cat, set, r, safe);
      };
      cand.program = build(true);
      if (!cand.program.signomials.empty() && !haveStart) {
        const SolveResult sc =
            solveConvex(simpleConservative(cat, set).program, opts);
        if (sc.ok()) scStart = sc.x;
        haveStart = true;
      }
      cand.result = solveProgram(cand.program, opts,
                                 scStart.size() > 0 ? &scStart : nullptr);
      if (cand.result.ok() && cand.program.rUsed > 0)
        lower = solveProgram(build(false), opts,
                             scStart.size() > 0 ? &scStart : nullptr);
    }
    if (cand.program.rUsed == 0) {
      cand.r = 0;  // no PWL pieces consumed; the bracket is exact
      return cand;
    }
    if (cand.result.ok()) {
      cand.gap = lower.ok()
                     ? std::max(0.0, gapCheck(cand.result.objective, lower.objective))
                     : std::numeric_limits<double>::infinity();
      out = std::move(cand);
      any = true;
      if (out.gap <= gapTol) return out;
    } else if (!any) {
      out = std::move(cand);  // keep the failure; a larger r may still succeed
    }
  }
  return out;
}

SweepResult gammaSweep(const GeometricProgram& gp, const SweepOptions& opts) {
  if (opts.grid.empty()) throw std::invalid_argument("gammaSweep: empty grid");
  for (std::size_t i = 1; i < opts.grid.size(); ++i)
    if (opts.grid[i] <= opts.grid[i - 1])
      throw std::invalid_argument("gammaSweep: grid must be strictly increasing");
  if (opts.grid.front() < 0.0)
    throw std::invalid_argument("gammaSweep: gamma must be nonnegative");

  const GeometricProgram base = toEpigraphForm(toInequalityForm(gp));
  const CategorizedProgram cat = categorize(base);
  const int L = perturbationDimension(gp);
  Vec sigma = opts.sigma.size() == 0 ? Vec::Ones(L) : opts.sigma;
  if (sigma.size() != L)
    throw std::invalid_argument("gammaSweep: sigma length mismatch");
  const PerturbationSet refSet = makeSet(opts.kind, L, opts.grid.back(), sigma);

  SweepResult sweep;
  sweep.grid = opts.grid;
  std::vector<double> lastObj(opts.methods.size(),
                              -std::numeric_limits<double>::infinity());
  for (double gamma : opts.grid) {
    const PerturbationSet set = makeSet(opts.kind, L, gamma, sigma);
    for (std::size_t mi = 0; mi < opts.methods.size(); ++mi) {
      const Method method = opts.methods[mi];
      const auto t0 = std::chrono::steady_clock::now();
      const RobustSolve rs = solveRobust(cat, method, set, opts.rSchedule,
                                         opts.gapTol, opts.solver, opts.seed);
      SweepCell cell;
      cell.gamma = gamma;
      cell.method = method;
      cell.kind = opts.kind;
      cell.status = rs.result.status;
      cell.nConstraints = rs.program.emittedCount;
      cell.r = rs.r;
      if (rs.result.ok()) {
        cell.objective = rs.result.objective;
        Vec design = Vec::Zero(gp.numVars);
        design = rs.result.x.head(gp.numVars);
        const SimulationReport rep =
            simulate(gp, design, refSet, opts.nSamples, opts.seed, opts.solver);
        cell.pFail = rep.pFail;
        cell.pFailLow = rep.pFailLow;
        cell.pFailHigh = rep.pFailHigh;
        cell.meanObjective = rep.meanObjective;
        if (cell.objective < lastObj[mi] * (1.0 - 1e-6) - 1e-12)
          throw std::runtime_error(
              "gammaSweep: robust objective decreased with gamma (" +
              methodName(method) + ")");
        lastObj[mi] = cell.objective;
      }
      const auto t1 = std::chrono::steady_clock::now();
      cell.wallMs =
          std::chrono::duration<double, std::milli>(t1 - t0).count();
      sweep.cells.push_back(cell);
    }
  }
  return sweep;
}

std::string sweepCsv(const SweepResult& sweep) {
  std::string out = "gamma,method,set,objective,pfail,mean_obj,n_constraints,r,wall_ms\n";
  char buf[256];
  for (const SweepCell& c : sweep.cells) {
    std::snprintf(buf, sizeof(buf), "%.6g,%s,%s,%.10g,%.6g,%.10g,%d,%d,%.3f\n",
                  c.gamma, methodName(c.method).c_str(),
                  setName(c.kind).c_str(), c.objective, c.pFail,
                  c.meanObjective, c.nConstraints, c.r, c.wallMs);
    out += buf;
  }
  return out;
}

}  // namespace rgp
