// formulations.hpp: the four robustification pipelines.
#ifndef RGP_FORMULATIONS_HPP
#define RGP_FORMULATIONS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rgp/partition.hpp"
#include "rgp/pwl.hpp"
#include "rgp/solver.hpp"
#include "rgp/uncertainty.hpp"

namespace rgp {

// Auxiliary variables grouped by role: class epigraphs t, pair epigraphs z,
// box absolute-value margins w, elliptical margin accumulators s.
struct AuxRegistry {
  std::vector<int> t, z, w, s;
};

// Per-container source map: entry -> index of the originating inequality
// (-1 for constraints not tied to one).
struct Provenance {
  std::vector<int> linear, lse, soc, sig;
};

struct RobustProgram {
  enum class Kind { GP, Conic, Signomial };
  Kind kind = Kind::GP;
  Method method = Method::SimpleConservative;
  ConvexProgram program;  // objective in program.cost; no data remains
  std::vector<SignomialConstraint> signomials;
  std::vector<std::string> varNames;  // size program.numVars
  AuxRegistry aux;
  Provenance provenance;
  int emittedCount = 0;  // constraints emitted from source inequalities
  int sources = 0;       // inequalities of the source program
  int rUsed = 0;         // PWL pieces consumed; 0 when none were needed
  bool exact = false;    // no conservatism was introduced beyond the
                         // exact robust counterpart
};

// One half-space certificate f.zeta + g >= prod_l exp(btilde_l zeta_l) over
// the unit box of the listed coordinates.
struct HalfSpace {
  std::vector<std::pair<int, double>> f;  // coordinate -> slope
  double g = 1.0;
};

// Least-squares fit over all unit-box vertices with interpolation pinned at
// the max and min vertices, then lifted until every vertex is upper-bounded.
// Columns are (coordinate, btilde) pairs; btilde has the set's per-coordinate
// radius already folded in. More than 20 coordinates falls back to the
// conservative f = 0, g = exp(sum |btilde|).
HalfSpace buildHalfSpace(const std::vector<std::pair<int, double>>& bCols);

// Pairing of one P-class: disjoint pairs of term indices covering the class,
// with at most one unpaired leftover when the class size is odd.
struct ClassPairing {
  int posy = -1;  // index into CategorizedProgram.posynomials
  int cls = -1;   // class index within that posynomial
  std::vector<std::pair<int, int>> pairs;
  int leftover = -1;
};
using Pairing = std::vector<ClassPairing>;

// Number of distinct pairings of an n-element class (odd n: one leftover).
std::uint64_t pairingCount(int n);

// Two-term chains over raw posynomials; every block is split into r robust
// PWL pieces. `safe` adds the approximation error to each piece, producing
// an upper (conservative) program; safe=false gives the matching relaxation.
RobustProgram twoTermFormulation(const CategorizedProgram& cat,
                                 const PerturbationSet& set, int r,
                                 bool safe = true);

// Term-wise decoupling: per multi-term posynomial one budget plus one robust
// monomial constraint per term; exact whenever the box set and consistent
// dependence make the decoupled maxima jointly attainable.
RobustProgram simpleConservative(const CategorizedProgram& cat,
                                 const PerturbationSet& set);

// Half-space linearization of P-classes (coefficient-only); N-classes use
// the two-term machinery with r pieces. Mixed-sign half-space slopes make
// the result Signomial-kind.
RobustProgram linearizedPerturbations(const CategorizedProgram& cat,
                                      const PerturbationSet& set, int r = 20,
                                      bool safe = true);

// Builds the Best Pairs program for one fixed pairing (no descent).
RobustProgram bestPairsProgram(const CategorizedProgram& cat,
                               const PerturbationSet& set,
                               const Pairing& pairing, int r, bool safe = true);

// Initial pairing: deterministic per-class shuffle driven by the seed.
Pairing randomPairing(const CategorizedProgram& cat, const PerturbationSet& set,
                      std::uint64_t seed);

struct BestPairsOptions {
  int r = 20;
  bool safe = true;
  int maxIters = 20;
  std::uint64_t seed = 0;
  int samplePairings = 0;  // 0: exact min-weight matching; >0: sampled subset
  SolverOptions solver;
};

struct BestPairsResult {
  RobustProgram program;      // program of the final accepted pairing
  SolveResult solution;       // solution of that program
  Pairing pairing;
  std::vector<double> trace;  // accepted objectives, non-increasing
  int iterations = 0;         // descent steps taken
  bool solverFailed = false;  // a re-solve failed; best-so-far returned
};

// Coordinate descent over pairings: solve, re-pair by minimum-weight
// matching on robust pair values at the current point, re-solve; stops when
// the pairing repeats, maxIters is hit, or a step fails to descend.
BestPairsResult bestPairs(const CategorizedProgram& cat,
                          const PerturbationSet& set,
                          const BestPairsOptions& opts = {});

struct AuditReport {
  double simpleConservative = 0.0, linearizedPerturbations = 0.0;
  double twoTerm = 0.0, bestPairs = 0.0;
  bool lpWithinSc = false, bpWithinTt = false;
  bool pass = false;
};

// Checks the guaranteed orderings LP <= SC (1+tol) and BP <= TT (1+tol).
// Throws std::invalid_argument when a method result is missing.
AuditReport conservativenessAudit(const std::map<Method, double>& objectives,
                                  double tol = 1e-4);

}  // namespace rgp

#endif  // RGP_FORMULATIONS_HPP
