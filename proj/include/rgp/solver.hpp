// solver.hpp: interior-point solver for exponential-cone form programs.
#ifndef RGP_SOLVER_HPP
#define RGP_SOLVER_HPP

#include <string>
#include <utility>
#include <vector>

#include "rgp/core.hpp"
#include "rgp/robust_lin.hpp"

namespace rgp {

// log sum_k exp(a_k.x + b_k) <= 0
struct LseCon {
  std::vector<std::pair<SparseRow, double>> terms;
};

// Convex program in log space:
//   min cost.x  s.t.  linear, LSE and second-order-cone constraints.
// Every variable must appear in at least one constraint or the cost.
struct ConvexProgram {
  int numVars = 0;
  SparseRow cost;
  std::vector<LinearCon> linear;
  std::vector<LseCon> lse;
  std::vector<SocCon> soc;

  std::size_t constraintCount() const {
    return linear.size() + lse.size() + soc.size();
  }
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations, NumericalFailure };

std::string statusName(SolveStatus s);

struct SolverOptions {
  double feasTol = 1e-8;        // accepted primal violation
  double optTol = 1e-6;         // requested objective accuracy
  double barrierGap = 1e-9;     // target duality gap m/t
  double mu = 10.0;             // barrier parameter growth
  int maxNewton = 2000;         // total Newton iteration budget
  double infeasThreshold = 1e-6;  // phase-I slack above this => infeasible
  double spTol = 1e-5;          // sequential-program relative stop
  int spMaxIter = 50;
  double trustShrink = 0.5;
  double trustRadius = 1.0;     // initial log-space trust region for SP
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x;
  double logObjective = 0.0;
  double objective = 0.0;  // exp(logObjective)
  int iterations = 0;      // Newton steps across both phases
  double maxViolation = 0.0;
  std::string message;

  bool ok() const { return status == SolveStatus::Optimal; }
};

// Barrier method with a phase-I feasibility stage. Deterministic.
SolveResult solveConvex(const ConvexProgram& p, const SolverOptions& opts = {});

// Largest constraint violation of x (0 when strictly feasible).
double maxViolation(const ConvexProgram& p, const Vec& x);

/// Sequential GP: signomial constraints lhs - rhs <= 0 are convexified by
// condensing rhs to its AM-GM monomial lower bound at the current iterate,
// then the resulting convex program is solved inside a shrinking trust
// region until the relative objective change drops below spTol.
// `start` seeds the first condensation; when null, the program without the
// signomial constraints is solved first to produce one.
struct SignomialResult {
  SolveResult result;
  std::vector<double> trace;  // accepted objective values, non-increasing
  int outerIterations = 0;
};

SignomialResult solveSignomial(const ConvexProgram& base,
                               const std::vector<SignomialConstraint>& sigs,
                               const std::vector<std::string>& varNames,
                               const Vec* start = nullptr,
                               const SolverOptions& opts = {});

// Converts a certain geometric program (no perturbation data, objective a
// single monomial) into convex form. Throws std::invalid_argument otherwise.
ConvexProgram toConvexProgram(const GeometricProgram& gp);

// Fixes the given variables, folds them into constants and solves the
// remaining certain GP. Result.x has full length with fixed values in place.
SolveResult fixAndSolve(const GeometricProgram& gp,
                        const std::vector<std::pair<int, double>>& fixed,
                        const SolverOptions& opts = {});

}  // namespace rgp

#endif  // RGP_SOLVER_HPP
