// uncertainty.hpp: perturbation sets, uncertain parameters, sampling.
#ifndef RGP_UNCERTAINTY_HPP
#define RGP_UNCERTAINTY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rgp/core.hpp"

namespace rgp {

// A named positive quantity with relative half-width rho, owning one
// perturbation coordinate. Its value under perturbation is
// nominal * (1 + rho)^zeta_l, so log-coefficients stay affine in zeta.
struct UncertainParameter {
  std::string name;
  double nominal = 1.0;
  double rho = 0.0;  // relative half-width, e.g. 0.311 for +/-31.1%
  int pertId = -1;
};

// Box: ||zeta||_inf <= gamma. Elliptical: ||diag(sigma)^-1 zeta||_2 <= gamma.
struct PerturbationSet {
  enum class Kind { Box, Elliptical };
  Kind kind = Kind::Box;
  double gamma = 1.0;
  Vec sigma;  // length L; all ones for box sets

  int L() const { return static_cast<int>(sigma.size()); }
  bool contains(const Vec& zeta, double slack = 1e-12) const;
  static PerturbationSet box(int L, double gamma);
  static PerturbationSet elliptical(int L, double gamma, Vec sigma = Vec());
};

// Flat view of one uncertain linear form a(zeta).x + b(zeta).
struct AffineData {
  SparseRow a0;
  double b0 = 0.0;
  SparseRow bCols;                               // l -> b^l
  std::vector<std::pair<int, SparseRow>> aCols;  // l -> a^l

  bool coefficientOnly() const { return aCols.empty(); }
  static AffineData fromMonomial(const Monomial& m);
  // w1 * y1 + w2 * y2, merging perturbation columns.
  static AffineData combine(double w1, const AffineData& y1, double w2,
                            const AffineData& y2);
};

// Number of perturbation coordinates referenced anywhere in the program
// (max coordinate + 1).
int perturbationDimension(const GeometricProgram& gp);

// Realized (a, b) at a concrete perturbation vector.
std::pair<SparseRow, double> realize(const AffineData& data, const Vec& zeta);
Monomial realize(const Monomial& m, const Vec& zeta);
GeometricProgram realize(const GeometricProgram& gp, const Vec& zeta);

// Deterministic uniform sampling on a set. Box: each coordinate uniform on
// [-gamma, gamma]. Elliptical: Gaussian direction scaled by radius^(1/L).
// Draws come from a splitmix64 stream so results are platform-independent.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : state_(seed) {}
  double uniform01();       // in [0, 1)
  double gaussian();        // standard normal
  SampleRng fork(std::uint64_t stream) const;  // independent per-sample stream

 private:
  std::uint64_t next();
  std::uint64_t state_;
};

Vec samplePerturbation(const PerturbationSet& set, SampleRng& rng);

// A program whose monomials still reference named parameters symbolically:
// each term is coeff * prod(vars^e) * prod(params^e).
struct RawMonomial {
  SparseRow varExp;
  SparseRow paramExp;  // index into the parameter list
  double logCoeff = 0.0;
};

struct RawPosynomial {
  std::vector<RawMonomial> terms;
};

struct ParameterizedProgram {
  RawPosynomial objective;
  std::vector<RawPosynomial> inequalities;  // each <= 1
  std::vector<std::string> varNames;
  std::vector<int> designVars;
};

// Folds parameter nominals into b0 and attaches one coefficient column
// b^l = e_p * log(1 + rho_p) per parameter occurrence. Exponents stay certain.
GeometricProgram propagateParameters(const ParameterizedProgram& prog,
                                     std::vector<UncertainParameter>& params);

}  // namespace rgp

#endif  // RGP_UNCERTAINTY_HPP
