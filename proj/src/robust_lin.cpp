// robust_lin.cpp: closed-form box and elliptical robust counterparts.
#include "rgp/robust_lin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rgp {

namespace {

std::vector<int> activeCoords(const AffineData& c) {
  std::vector<int> coords;
  for (const auto& [l, v] : c.bCols.entries()) {
    if (v != 0.0) coords.push_back(l);
  }
  for (const auto& [l, row] : c.aCols) {
    if (!row.empty()) coords.push_back(l);
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

const SparseRow* aColOf(const AffineData& c, int l) {
  for (const auto& [coord, row] : c.aCols)
    if (coord == l) return &row;
  return nullptr;
}

}  // namespace

RobustLinearResult robustifyBox(const AffineData& c, double gamma, const VarAllocator& alloc) {
  RobustLinearResult out;
  if (c.coefficientOnly()) {
    double margin = 0.0;
    for (const auto& [l, bl] : c.bCols.entries()) {
      (void)l;
      margin += std::abs(bl);
    }
    out.linear.push_back({c.a0, c.b0 + gamma * margin});
    return out;
  }
  if (!alloc) throw std::invalid_argument("exponent uncertainty needs a variable allocator");
  const auto coords = activeCoords(c);
  LinearCon main{c.a0, c.b0};
  for (int l : coords) {
    const int w = alloc("_w" + std::to_string(l));
    out.auxVars.push_back(w);
    main.a.add(w, gamma);
    const double bl = c.bCols.get(l);
    const SparseRow* al = aColOf(c, l);
    LinearCon plus, minus;
    if (al) plus.a = *al;
    plus.a.add(w, -1.0);
    plus.b = bl;
    if (al) minus.a = al->negated();
    minus.a.add(w, -1.0);
    minus.b = -bl;
    out.linear.push_back(std::move(plus));
    out.linear.push_back(std::move(minus));
  }
  out.linear.insert(out.linear.begin(), std::move(main));
  return out;
}

RobustLinearResult robustifyElliptical(const AffineData& c, double gamma, const Vec& sigma) {
  RobustLinearResult out;
  if (c.coefficientOnly()) {
    double sq = 0.0;
    for (const auto& [l, bl] : c.bCols.entries()) sq += sigma[l] * sigma[l] * bl * bl;
    out.linear.push_back({c.a0, c.b0 + gamma * std::sqrt(sq)});
    return out;
  }
  SocCon soc;
  soc.affine = {c.a0, c.b0};
  for (int l : activeCoords(c)) {
    LinearCon row;
    const SparseRow* al = aColOf(c, l);
    if (al) row.a = *al;
    row.b = c.bCols.get(l);
    const double scale = gamma * sigma[l];
    row.a.scale(scale);
    row.b *= scale;
    soc.norm.push_back(std::move(row));
  }
  out.soc.push_back(std::move(soc));
  return out;
}

RobustLinearResult robustify(const AffineData& c, const PerturbationSet& set,
                             const VarAllocator& alloc) {
  if (set.kind == PerturbationSet::Kind::Box) return robustifyBox(c, set.gamma, alloc);
  return robustifyElliptical(c, set.gamma, set.sigma);
}

double boxVertexMax(const AffineData& c, double gamma, const Vec& x) {
  const auto coords = activeCoords(c);
  if (coords.size() > 20) throw std::invalid_argument("vertex enumeration capped at 20 coordinates");
  double best = -std::numeric_limits<double>::infinity();
  const std::size_t n = coords.size();
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    double val = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int l = coords[i];
      const double zl = (mask >> i) & 1 ? gamma : -gamma;
      double slope = c.bCols.get(l);
      if (const SparseRow* al = aColOf(c, l)) slope += al->dot(x);
      val += zl * slope;
    }
    best = std::max(best, val);
  }
  return n == 0 ? 0.0 : best;
}

void RobustLinearResult::append(const RobustLinearResult& other) {
  linear.insert(linear.end(), other.linear.begin(), other.linear.end());
  soc.insert(soc.end(), other.soc.begin(), other.soc.end());
  auxVars.insert(auxVars.end(), other.auxVars.begin(), other.auxVars.end());
}

Cone dualCone(const Cone& k) {
  switch (k.kind) {
    case ConeKind::Linf: return {ConeKind::L1, k.dim};
    case ConeKind::L1: return {ConeKind::Linf, k.dim};
    case ConeKind::L2: return {ConeKind::L2, k.dim};
  }
  return k;
}

}  // namespace rgp
