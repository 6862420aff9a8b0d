// core.cpp: algebra on log-space monomials and standard-form transforms.
#include "rgp/core.hpp"

#include <algorithm>
#include <cmath>

namespace rgp {

SparseRow::SparseRow(std::initializer_list<std::pair<int, double>> init) {
  for (const auto& [i, v] : init) add(i, v);
}

void SparseRow::add(int index, double value) {
  if (value == 0.0) return;
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, int i) { return e.first < i; });
  if (it != entries_.end() && it->first == index) {
    it->second += value;
    if (it->second == 0.0) entries_.erase(it);
  } else {
    entries_.insert(it, {index, value});
  }
}

double SparseRow::get(int index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, int i) { return e.first < i; });
  return (it != entries_.end() && it->first == index) ? it->second : 0.0;
}

void SparseRow::scale(double factor) {
  if (factor == 0.0) {
    entries_.clear();
    return;
  }
  for (auto& e : entries_) e.second *= factor;
}

void SparseRow::axpy(double factor, const SparseRow& other) {
  if (factor == 0.0) return;
  for (const auto& [i, v] : other.entries_) add(i, factor * v);
}

void SparseRow::prune(double tol) {
  entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                [tol](const auto& e) { return std::abs(e.second) <= tol; }),
                 entries_.end());
}

double SparseRow::dot(const Vec& x) const {
  double s = 0.0;
  for (const auto& [i, v] : entries_) s += v * x[i];
  return s;
}

int SparseRow::maxIndex() const { return entries_.empty() ? -1 : entries_.back().first; }

SparseRow SparseRow::negated() const {
  SparseRow out(*this);
  out.scale(-1.0);
  return out;
}

std::vector<int> Perturbation::support() const {
  std::vector<int> coords;
  for (const auto& [l, v] : bCols.entries()) {
    (void)v;
    coords.push_back(l);
  }
  for (const auto& [l, row] : aCols) {
    if (!row.empty()) coords.push_back(l);
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

Monomial Monomial::reciprocal() const {
  Monomial out;
  out.a = a.negated();
  out.b = -b;
  out.pert.bCols = pert.bCols.negated();
  for (const auto& [l, row] : pert.aCols) out.pert.aCols.emplace_back(l, row.negated());
  return out;
}

int GeometricProgram::addVar(const std::string& name) {
  varNames.resize(static_cast<std::size_t>(numVars), "");
  varNames.push_back(name);
  return numVars++;
}

const std::string& GeometricProgram::varName(int v) const {
  static const std::string unnamed = "?";
  if (v < 0 || static_cast<std::size_t>(v) >= varNames.size()) return unnamed;
  return varNames[static_cast<std::size_t>(v)];
}

double evalMonomialLog(const Monomial& m, const Vec& x) {
  const double arg = m.a.dot(x) + m.b;
  if (arg > kOverflowThreshold) throw OverflowError("monomial exponent overflow");
  return arg;
}

double evalMonomial(const Monomial& m, const Vec& x) { return std::exp(evalMonomialLog(m, x)); }

double evalPosynomial(const Posynomial& p, const Vec& x) {
  double s = 0.0;
  for (const auto& t : p.terms) s += evalMonomial(t, x);
  return s;
}

GeometricProgram toInequalityForm(const GeometricProgram& gp) {
  GeometricProgram out = gp;
  out.equalities.clear();
  for (const auto& h : gp.equalities) {
    out.inequalities.emplace_back(std::vector<Monomial>{h});
    out.inequalities.emplace_back(std::vector<Monomial>{h.reciprocal()});
  }
  return out;
}

namespace {

bool isBareVariable(const Posynomial& p) {
  if (p.terms.size() != 1) return false;
  const Monomial& m = p.terms.front();
  return m.certain() && m.b == 0.0 && m.a.size() == 1 && m.a.entries().front().second == 1.0;
}

}  // namespace

GeometricProgram toEpigraphForm(const GeometricProgram& gp) {
  if (isBareVariable(gp.objective)) return gp;
  GeometricProgram out = gp;
  const int t = out.addVar("_obj");
  Posynomial moved = gp.objective;
  for (auto& term : moved.terms) term.a.add(t, -1.0);
  out.inequalities.push_back(std::move(moved));
  Monomial epi;
  epi.a.add(t, 1.0);
  out.objective = Posynomial({epi});
  return out;
}

std::string methodName(Method m) {
  switch (m) {
    case Method::TwoTerm: return "two-term";
    case Method::SimpleConservative: return "simple";
    case Method::LinearizedPerturbations: return "linperts";
    case Method::BestPairs: return "best-pairs";
  }
  return "?";
}

Method methodFromName(const std::string& name) {
  if (name == "two-term") return Method::TwoTerm;
  if (name == "simple") return Method::SimpleConservative;
  if (name == "linperts") return Method::LinearizedPerturbations;
  if (name == "best-pairs") return Method::BestPairs;
  throw std::invalid_argument("unknown method: " + name);
}

int countConstraints(const GeometricProgram& gp, Method method, int r) {
  int m = 0, n = 0, pBlocks = 0;
  for (const auto& p : gp.inequalities) {
    const int K = static_cast<int>(p.K());
    if (K == 1)
      ++m;
    else if (K == 2)
      ++n;
    else
      pBlocks += K - 1;
  }
  switch (method) {
    case Method::TwoTerm:
      if (r < 2) throw std::invalid_argument("two-term count needs r >= 2");
      return r * pBlocks + r * n + m;
    case Method::SimpleConservative: {
      int total = m + 3 * n;
      for (const auto& p : gp.inequalities) {
        const int K = static_cast<int>(p.K());
        if (K >= 3) total += K + 1;
      }
      return total;
    }
    default:
      throw std::invalid_argument("no closed-form count for " + methodName(method));
  }
}

}  // namespace rgp
