// robust_lin.hpp: robust counterparts of uncertain linear log-space constraints.
#ifndef RGP_ROBUST_LIN_HPP
#define RGP_ROBUST_LIN_HPP

#include <functional>
#include <vector>

#include "rgp/core.hpp"
#include "rgp/uncertainty.hpp"

namespace rgp {

// a.x + b <= 0
struct LinearCon {
  SparseRow a;
  double b = 0.0;
  double eval(const Vec& x) const { return a.dot(x) + b; }
};

// ||(norm_i(x))||_2 <= -affine(x)
struct SocCon {
  std::vector<LinearCon> norm;
  LinearCon affine;
};

struct RobustLinearResult {
  std::vector<LinearCon> linear;
  std::vector<SocCon> soc;
  std::vector<int> auxVars;  // absolute-value splitting variables, if any

  void append(const RobustLinearResult& other);
  std::size_t count() const { return linear.size() + soc.size(); }
};

using VarAllocator = std::function<int(const std::string&)>;

// Box set ||zeta||_inf <= gamma applied to a(zeta).x + b(zeta) <= 0.
// Coefficient-only data folds to one linear constraint with margin
// gamma * sum_l |b^l|; exponent uncertainty splits absolute values with one
// auxiliary per active coordinate (2L + 1 linear constraints).
RobustLinearResult robustifyBox(const AffineData& c, double gamma,
                                const VarAllocator& alloc = nullptr);

// Elliptical set ||diag(sigma)^-1 zeta||_2 <= gamma. Coefficient-only data
// folds to one linear constraint with margin gamma * sqrt(sum sigma^2 (b^l)^2);
// exponent uncertainty emits one second-order-cone constraint.
RobustLinearResult robustifyElliptical(const AffineData& c, double gamma, const Vec& sigma);

RobustLinearResult robustify(const AffineData& c, const PerturbationSet& set,
                             const VarAllocator& alloc = nullptr);

// Exact sup of the uncertain part over a box, by vertex enumeration
// (exponential in the support size; capped at 20 coordinates).
double boxVertexMax(const AffineData& c, double gamma, const Vec& x);

enum class ConeKind { Linf, L1, L2 };

struct Cone {
  ConeKind kind;
  int dim = 0;
};

Cone dualCone(const Cone& k);

}  // namespace rgp

#endif  // RGP_ROBUST_LIN_HPP
