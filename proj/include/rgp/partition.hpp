// partition.hpp: dependency graphs, equivalence classes, categorized form.
#ifndef RGP_PARTITION_HPP
#define RGP_PARTITION_HPP

#include <vector>

#include "rgp/core.hpp"

namespace rgp {

// Adjacency over term indices of one posynomial; an edge means the two
// monomials share at least one perturbation coordinate.
struct DependencyGraph {
  int K = 0;
  std::vector<std::vector<int>> adj;

  bool hasEdge(int i, int j) const;
};

DependencyGraph buildDependencyGraph(const Posynomial& p);

// Connected components of the dependency graph, each sorted, ordered by
// smallest member index. Together they cover {0..K-1}.
std::vector<std::vector<int>> partitionPosynomial(const Posynomial& p);

enum class ClassCat { M, N, P };  // |class| == 1, == 2, >= 3

struct TermClass {
  std::vector<int> members;  // term indices, sorted
  ClassCat cat = ClassCat::M;
  int tVar = -1;  // epigraph variable; -1 when the class inherits the 1-bound
  bool consistent = false;   // same-sign coefficient columns, no exponent columns
  int uncertainCount = 0;    // members with nonempty perturbation
};

struct CategorizedPosynomial {
  int source = -1;  // index into gp.inequalities
  std::vector<TermClass> classes;
};

struct CategorizedProgram {
  GeometricProgram gp;  // with class epigraph variables appended
  std::vector<CategorizedPosynomial> posynomials;
  int baseVars = 0;  // variable count before epigraph variables were added
  int countM = 0, countN = 0, countP = 0;
};

// Splits every inequality into classes; posynomials with two or more classes
// get one epigraph variable per class plus an implied budget sum <= 1.
CategorizedProgram categorize(const GeometricProgram& gp);

/// Consistent dependence: on every shared coordinate all nonzero coefficient
// columns agree in sign and no exponent columns appear. For box sets this
// certifies that decoupling the class loses nothing.
bool consistentDependence(const Posynomial& p, const std::vector<int>& members);

}  // namespace rgp

#endif  // RGP_PARTITION_HPP
