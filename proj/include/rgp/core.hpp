// core.hpp: monomials, posynomials and geometric programs in log space.
#ifndef RGP_CORE_HPP
#define RGP_CORE_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace rgp {

using Vec = Eigen::VectorXd;

// Exponent arguments beyond this are treated as overflow rather than inf.
constexpr double kOverflowThreshold = 700.0;

struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sparse vector with sorted, unique indices.
class SparseRow {
 public:
  SparseRow() = default;
  SparseRow(std::initializer_list<std::pair<int, double>> init);

  void add(int index, double value);  // accumulates; drops exact zeros lazily
  double get(int index) const;
  void scale(double factor);
  void axpy(double factor, const SparseRow& other);  // *this += factor*other
  void prune(double tol = 0.0);                      // drop |value| <= tol

  double dot(const Vec& x) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  int maxIndex() const;

  const std::vector<std::pair<int, double>>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool operator==(const SparseRow& other) const { return entries_ == other.entries_; }
  SparseRow negated() const;

 private:
  std::vector<std::pair<int, double>> entries_;
};

// Per-monomial uncertainty: coefficient columns b^l and exponent columns a^l,
// both indexed by the perturbation coordinate l.
struct Perturbation {
  SparseRow bCols;                                   // l -> b^l
  std::vector<std::pair<int, SparseRow>> aCols;      // l -> a^l, sorted by l

  bool empty() const { return bCols.empty() && aCols.empty(); }
  // Coordinates touched by either b or a columns, sorted.
  std::vector<int> support() const;
};

// e^{a.x + b} with optional affine dependence on the perturbation vector.
struct Monomial {
  SparseRow a;
  double b = 0.0;
  Perturbation pert;

  bool certain() const { return pert.empty(); }
  Monomial reciprocal() const;  // negates a, b and every perturbation column
};

// Sum of monomials; term order is stable and meaningful.
struct Posynomial {
  std::vector<Monomial> terms;

  Posynomial() = default;
  explicit Posynomial(std::vector<Monomial> t) : terms(std::move(t)) {}
  std::size_t K() const { return terms.size(); }
};

// lhs - rhs <= 0 with both sides posynomials; not GP-representable in
// general, handled by sequential convexification in the solver.
struct SignomialConstraint {
  Posynomial lhs;
  Posynomial rhs;
};

// min objective  s.t.  inequalities <= 1, equalities == 1.
struct GeometricProgram {
  Posynomial objective;
  std::vector<Posynomial> inequalities;
  std::vector<Monomial> equalities;
  int numVars = 0;
  std::vector<std::string> varNames;  // size numVars (auto-filled when grown)
  std::vector<int> designVars;

  int addVar(const std::string& name);
  const std::string& varName(int v) const;
};

double evalMonomialLog(const Monomial& m, const Vec& x);  // a.x + b, overflow-checked
double evalMonomial(const Monomial& m, const Vec& x);
double evalPosynomial(const Posynomial& p, const Vec& x);

// Replaces each equality h = 1 by h <= 1 and 1/h <= 1.
GeometricProgram toInequalityForm(const GeometricProgram& gp);

// Moves objective data into a constraint so the objective is a bare variable.
// A certain single-variable objective (one term, b = 0, unit exponent) is
// already in this form and is returned unchanged.
GeometricProgram toEpigraphForm(const GeometricProgram& gp);

enum class Method { TwoTerm, SimpleConservative, LinearizedPerturbations, BestPairs };

std::string methodName(Method m);
Method methodFromName(const std::string& name);

// Constraint-count formulas over the raw inequality list, classifying each
// posynomial by its term count K (K = 1 -> M, K = 2 -> N, K >= 3 -> P):
//   TwoTerm:            r * sum_P (K_i - 1) + r * |N| + |M|
//   SimpleConservative: sum_P (K_i + 1) + 3 * |N| + |M|
// LinearizedPerturbations and BestPairs have no closed-form count.
int countConstraints(const GeometricProgram& gp, Method method, int r);

}  // namespace rgp

#endif  // RGP_CORE_HPP
