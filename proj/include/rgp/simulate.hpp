// simulate.hpp: Monte Carlo failure estimation and gamma-sweep driver.
#ifndef RGP_SIMULATE_HPP
#define RGP_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rgp/core.hpp"
#include "rgp/formulations.hpp"
#include "rgp/partition.hpp"
#include "rgp/solver.hpp"
#include "rgp/uncertainty.hpp"

namespace rgp {

// Outcome of re-solving the dependent variables under one realization.
struct SampleRecord {
  SolveStatus status = SolveStatus::Optimal;
  double objective = 0.0;  // meaningful only when status == Optimal
};

struct SimulationReport {
  int samples = 0;
  int failures = 0;           // infeasible completions; numerical included
  int numericalFailures = 0;  // the subset caused by solver breakdown
  double pFail = 0.0;         // failures / samples
  double pFailLow = 0.0;      // Wilson 95% score interval
  double pFailHigh = 1.0;
  double meanObjective = 0.0;  // over feasible samples; 0 when none succeed
  std::vector<SampleRecord> records;
};

// Wilson 95% score interval for k failures out of n trials.
std::pair<double, double> wilsonInterval(int k, int n);

// Fixes the design variables of gp at the values design takes on them
// (design is a full-length log-space point), then draws nSamples
// perturbations from the set, realizes the data and re-solves for the
// dependent variables. Sample i uses the forked stream i of seed, so the
// report is reproducible and independent of evaluation order.
SimulationReport simulate(const GeometricProgram& gp, const Vec& design,
                          const PerturbationSet& set, int nSamples,
                          std::uint64_t seed, const SolverOptions& opts = {});

// Robust counterpart solved with r refined along a schedule until the
// safe/relaxed PWL bracket satisfies gapCheck <= gapTol. Formulations that
// consumed no PWL pieces solve once and report r = 0.
struct RobustSolve {
  RobustProgram program;
  SolveResult result;
  int r = 0;
  double gap = 0.0;   // final bracket width, relative
  Pairing pairing;    // populated for BestPairs
};

RobustSolve solveRobust(const CategorizedProgram& cat, Method method,
                        const PerturbationSet& set,
                        const std::vector<int>& rSchedule, double gapTol,
                        const SolverOptions& opts = {}, std::uint64_t seed = 0);

// One sweep cell: a method at one gamma, simulated against the reference
// set built from the largest gamma of the grid so pFail is comparable.
struct SweepCell {
  double gamma = 0.0;
  Method method = Method::SimpleConservative;
  PerturbationSet::Kind kind = PerturbationSet::Kind::Box;
  SolveStatus status = SolveStatus::Optimal;
  double objective = 0.0;  // robust objective in original units
  double pFail = 0.0;
  double pFailLow = 0.0, pFailHigh = 0.0;
  double meanObjective = 0.0;
  int nConstraints = 0;
  int r = 0;
  double wallMs = 0.0;
};

struct SweepResult {
  std::vector<double> grid;
  std::vector<SweepCell> cells;  // grid-major, methods in option order
};

struct SweepOptions {
  std::vector<Method> methods = {Method::TwoTerm, Method::SimpleConservative,
                                 Method::LinearizedPerturbations,
                                 Method::BestPairs};
  PerturbationSet::Kind kind = PerturbationSet::Kind::Box;
  std::vector<double> grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  Vec sigma;  // elliptical scaling; defaults to ones
  std::vector<int> rSchedule = {10, 20, 40, 80, 100};
  double gapTol = 1e-3;
  int nSamples = 1000;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

// Robustify + solve + simulate every (gamma, method) cell of the grid.
// Throws std::invalid_argument on an empty or non-increasing grid and
// std::runtime_error if a method's objective decreases with gamma beyond
// solver tolerance (set inclusion makes larger gamma a restriction).
SweepResult gammaSweep(const GeometricProgram& gp, const SweepOptions& opts);

// CSV serialization under the fixed header
//   gamma,method,set,objective,pfail,mean_obj,n_constraints,r,wall_ms
std::string sweepCsv(const SweepResult& sweep);

}  // namespace rgp

#endif  // RGP_SIMULATE_HPP
