// pwl.hpp: piecewise-linear softplus approximations and two-term splitting.
#ifndef RGP_PWL_HPP
#define RGP_PWL_HPP

#include <vector>

#include "rgp/robust_lin.hpp"
#include "rgp/uncertainty.hpp"

// Piecewise-linear lower approximation of the softplus function
// phi(x) = log(1 + e^x), used to split a two-term log-sum-exp into
// linear pieces that can be robustified individually.

namespace rgp {

// phi and its derivative, overflow-safe.
double softplus(double x);
double softplusPrime(double x);

// An r-piece lower approximation phiLower(x) = max_i (slope[i]*x + offset[i])
// with phiLower <= phi <= phiLower + eps everywhere.  Pieces are ordered by
// slope; slope[0] = 0 and slope[r-1] = 1.  breaks[i] is the crossing point
// between piece i and piece i+1; tangents[i] is the abscissa where interior
// piece i+1 touches phi.
struct PwlApprox {
  int r = 0;
  std::vector<double> slope;
  std::vector<double> offset;
  std::vector<double> breaks;
  std::vector<double> tangents;
  double eps = 0.0;

  double eval(double x) const;  // phiLower(x)
};

// Smallest achievable error for an r-piece approximation, and the pieces
// realizing it.  Results are cached; r >= 2 required.
const PwlApprox& buildPwl(int r);

// Robust counterpart of the two-term constraint
//   log(e^{y1} + e^{y2}) <= x[rhsVar]   for all zeta in the set,
// where y1, y2 are affine in (x, zeta) and rhsVar < 0 means rhs 0 (i.e. <= 1
// in posynomial form).  Each PWL piece
//   (1-a_i) y1 + a_i y2 + b_i (+ eps if safe) <= x[rhsVar]
// is robustified.  `safe` selects the conservative (upper) approximation;
// without it the relaxed (lower bound) variant is produced.
RobustLinearResult robustifyTwoTerm(const AffineData& y1, const AffineData& y2,
                                    int rhsVar, const PerturbationSet& set,
                                    int r, bool safe,
                                    const VarAllocator& alloc = nullptr);

// Relative optimality gap (upper - lower) / lower between the safe and
// relaxed solutions of the same robust program.  Throws std::invalid_argument
// unless both are finite and lower > 0.
double gapCheck(double upper, double lower);

}  // namespace rgp

#endif  // RGP_PWL_HPP
