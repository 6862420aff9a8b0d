// partition.cpp: union-find partitioning and class categorization.
#include "rgp/partition.hpp"

#include <algorithm>
#include <numeric>

namespace rgp {

bool DependencyGraph::hasEdge(int i, int j) const {
  const auto& nbrs = adj[static_cast<std::size_t>(i)];
  return std::find(nbrs.begin(), nbrs.end(), j) != nbrs.end();
}

DependencyGraph buildDependencyGraph(const Posynomial& p) {
  const int K = static_cast<int>(p.K());
  DependencyGraph g;
  g.K = K;
  g.adj.resize(static_cast<std::size_t>(K));
  std::vector<std::vector<int>> supports(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) supports[static_cast<std::size_t>(k)] = p.terms[static_cast<std::size_t>(k)].pert.support();
  for (int i = 0; i < K; ++i) {
    for (int j = i + 1; j < K; ++j) {
      const auto& si = supports[static_cast<std::size_t>(i)];
      const auto& sj = supports[static_cast<std::size_t>(j)];
      bool shared = false;
      for (std::size_t a = 0, b = 0; a < si.size() && b < sj.size();) {
        if (si[a] == sj[b]) {
          shared = true;
          break;
        }
        si[a] < sj[b] ? ++a : ++b;
      }
      if (shared) {
        g.adj[static_cast<std::size_t>(i)].push_back(j);
        g.adj[static_cast<std::size_t>(j)].push_back(i);
      }
    }
  }
  return g;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

std::vector<std::vector<int>> partitionPosynomial(const Posynomial& p) {
  const DependencyGraph g = buildDependencyGraph(p);
  UnionFind uf(g.K);
  for (int i = 0; i < g.K; ++i)
    for (int j : g.adj[static_cast<std::size_t>(i)])
      if (j > i) uf.unite(i, j);
  std::vector<std::vector<int>> classes;
  std::vector<int> rootToClass(static_cast<std::size_t>(g.K), -1);
  for (int k = 0; k < g.K; ++k) {
    const int root = uf.find(k);
    if (rootToClass[static_cast<std::size_t>(root)] < 0) {
      rootToClass[static_cast<std::size_t>(root)] = static_cast<int>(classes.size());
      classes.emplace_back();
    }
    classes[static_cast<std::size_t>(rootToClass[static_cast<std::size_t>(root)])].push_back(k);
  }
  return classes;  // ordered by smallest member because k runs in order
}

bool consistentDependence(const Posynomial& p, const std::vector<int>& members) {
  // sign per coordinate: 0 unseen, +1/-1 committed
  std::vector<std::pair<int, int>> signs;  // (coord, sign)
  auto signOf = [&signs](int l) -> int* {
    for (auto& [coord, s] : signs)
      if (coord == l) return &s;
    signs.emplace_back(l, 0);
    return &signs.back().second;
  };
  for (int k : members) {
    const auto& pert = p.terms[static_cast<std::size_t>(k)].pert;
    for (const auto& [l, row] : pert.aCols)
      if (!row.empty()) return false;
    for (const auto& [l, bl] : pert.bCols.entries()) {
      if (bl == 0.0) continue;
      int* s = signOf(l);
      const int cur = bl > 0.0 ? 1 : -1;
      if (*s == 0)
        *s = cur;
      else if (*s != cur)
        return false;
    }
  }
  return true;
}

CategorizedProgram categorize(const GeometricProgram& gp) {
  CategorizedProgram cat;
  cat.gp = gp;
  cat.baseVars = gp.numVars;
  for (std::size_t i = 0; i < gp.inequalities.size(); ++i) {
    const Posynomial& p = gp.inequalities[i];
    CategorizedPosynomial cp;
    cp.source = static_cast<int>(i);
    auto classes = partitionPosynomial(p);
    const bool needsSplit = classes.size() >= 2;
    for (std::size_t j = 0; j < classes.size(); ++j) {
      TermClass tc;
      tc.members = std::move(classes[j]);
      const std::size_t n = tc.members.size();
      tc.cat = n == 1 ? ClassCat::M : (n == 2 ? ClassCat::N : ClassCat::P);
      tc.consistent = consistentDependence(p, tc.members);
      for (int k : tc.members)
        if (!p.terms[static_cast<std::size_t>(k)].certain()) ++tc.uncertainCount;
      if (needsSplit)
        tc.tVar = cat.gp.addVar("_t" + std::to_string(i) + "_" + std::to_string(j));
      switch (tc.cat) {
        case ClassCat::M: ++cat.countM; break;
        case ClassCat::N: ++cat.countN; break;
        case ClassCat::P: ++cat.countP; break;
      }
      cp.classes.push_back(std::move(tc));
    }
    cat.posynomials.push_back(std::move(cp));
  }
  return cat;
}

}  // namespace rgp
