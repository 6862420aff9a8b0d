// models.hpp: built-in benchmark models.
#ifndef RGP_MODELS_HPP
#define RGP_MODELS_HPP

#include <cstdint>
#include <vector>

#include "rgp/core.hpp"
#include "rgp/uncertainty.hpp"

namespace rgp {

// Simple-wing sizing: minimize drag over wing area S and aspect ratio A,
// with seven dependent variables and thirteen uncertain parameters.
// Structure is asserted at build time: 8 inequalities categorize into 5
// monomial classes, 2 two-term classes and 1 three-term class.
struct WingModel {
  GeometricProgram gp;  // uncertain data attached, all coefficient-only
  std::vector<UncertainParameter> params;  // 13 entries
  int varA = -1;  // design: aspect ratio
  int varS = -1;  // design: wing area
  int varD = -1;  // objective variable: total drag
};

WingModel buildWing();

// Shape of a generated instance. Constraints are scaled so a planted point
// satisfies the box gamma=1 worst case with 0.2 slack, making the program
// and every robust counterpart on a subset feasible by construction.
struct SyntheticSpec {
  int numVars = 40;
  int numConstraints = 120;
  int maxTerms = 6;    // terms per generated posynomial, uniform in [1, max]
  int numParams = 25;  // uncertain parameters shared through per-posy pools
  double density = 0.5;  // chance a term picks up each pool parameter
  std::uint64_t seed = 1;
};

struct SyntheticModel {
  GeometricProgram gp;  // includes +-4 log-space bound monomials per var
  std::vector<UncertainParameter> params;
  Vec plantedPoint;  // feasible for the box gamma=1 counterpart by scaling
};

SyntheticModel generateSynthetic(const SyntheticSpec& spec);

}  // namespace rgp

#endif  // RGP_MODELS_HPP
