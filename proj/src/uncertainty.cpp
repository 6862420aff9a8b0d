// uncertainty.cpp: affine data realization and set sampling.
#include "rgp/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rgp {

bool PerturbationSet::contains(const Vec& zeta, double slack) const {
  if (zeta.size() != sigma.size()) return false;
  if (kind == Kind::Box) return zeta.lpNorm<Eigen::Infinity>() <= gamma + slack;
  return (zeta.array() / sigma.array()).matrix().norm() <= gamma + slack;
}

PerturbationSet PerturbationSet::box(int L, double gamma) {
  PerturbationSet s;
  s.kind = Kind::Box;
  s.gamma = gamma;
  s.sigma = Vec::Ones(L);
  return s;
}

PerturbationSet PerturbationSet::elliptical(int L, double gamma, Vec sigma) {
  PerturbationSet s;
  s.kind = Kind::Elliptical;
  s.gamma = gamma;
  s.sigma = sigma.size() == 0 ? Vec::Ones(L) : std::move(sigma);
  if (s.sigma.size() != L) throw std::invalid_argument("sigma length mismatch");
  if ((s.sigma.array() <= 0.0).any()) throw std::invalid_argument("sigma must be positive");
  return s;
}

AffineData AffineData::fromMonomial(const Monomial& m) {
  AffineData d;
  d.a0 = m.a;
  d.b0 = m.b;
  d.bCols = m.pert.bCols;
  d.aCols = m.pert.aCols;
  return d;
}

AffineData AffineData::combine(double w1, const AffineData& y1, double w2,
                               const AffineData& y2) {
  AffineData d;
  d.a0 = y1.a0;
  d.a0.scale(w1);
  d.a0.axpy(w2, y2.a0);
  d.b0 = w1 * y1.b0 + w2 * y2.b0;
  d.bCols = y1.bCols;
  d.bCols.scale(w1);
  d.bCols.axpy(w2, y2.bCols);
  d.bCols.prune();
  auto blend = [&](const std::vector<std::pair<int, SparseRow>>& cols, double w) {
    for (const auto& [l, col] : cols) {
      auto it = std::find_if(d.aCols.begin(), d.aCols.end(),
                             [l](const auto& e) { return e.first == l; });
      if (it == d.aCols.end()) {
        d.aCols.emplace_back(l, SparseRow());
        it = std::prev(d.aCols.end());
      }
      it->second.axpy(w, col);
    }
  };
  blend(y1.aCols, w1);
  blend(y2.aCols, w2);
  std::sort(d.aCols.begin(), d.aCols.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [l, col] : d.aCols) col.prune();
  d.aCols.erase(std::remove_if(d.aCols.begin(), d.aCols.end(),
                               [](const auto& e) { return e.second.entries().empty(); }),
                d.aCols.end());
  return d;
}

int perturbationDimension(const GeometricProgram& gp) {
  int dim = 0;
  auto scanMono = [&dim](const Monomial& m) {
    for (int l : m.pert.support()) dim = std::max(dim, l + 1);
  };
  for (const auto& t : gp.objective.terms) scanMono(t);
  for (const auto& p : gp.inequalities)
    for (const auto& t : p.terms) scanMono(t);
  for (const auto& h : gp.equalities) scanMono(h);
  return dim;
}

std::pair<SparseRow, double> realize(const AffineData& data, const Vec& zeta) {
  SparseRow a = data.a0;
  double b = data.b0;
  for (const auto& [l, bl] : data.bCols.entries()) b += zeta[l] * bl;
  for (const auto& [l, al] : data.aCols) a.axpy(zeta[l], al);
  return {std::move(a), b};
}

Monomial realize(const Monomial& m, const Vec& zeta) {
  auto [a, b] = realize(AffineData::fromMonomial(m), zeta);
  Monomial out;
  out.a = std::move(a);
  out.b = b;
  return out;
}

GeometricProgram realize(const GeometricProgram& gp, const Vec& zeta) {
  GeometricProgram out;
  out.numVars = gp.numVars;
  out.varNames = gp.varNames;
  out.designVars = gp.designVars;
  auto realizePosy = [&zeta](const Posynomial& p) {
    Posynomial q;
    q.terms.reserve(p.terms.size());
    for (const auto& t : p.terms) q.terms.push_back(realize(t, zeta));
    return q;
  };
  out.objective = realizePosy(gp.objective);
  for (const auto& p : gp.inequalities) out.inequalities.push_back(realizePosy(p));
  for (const auto& h : gp.equalities) out.equalities.push_back(realize(h, zeta));
  return out;
}

std::uint64_t SampleRng::next() {
  // splitmix64: deterministic across platforms, unlike std:: distributions.
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SampleRng::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SampleRng::gaussian() {
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SampleRng SampleRng::fork(std::uint64_t stream) const {
  SampleRng child(state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
  child.next();
  return child;
}

Vec samplePerturbation(const PerturbationSet& set, SampleRng& rng) {
  const int L = set.L();
  Vec zeta(L);
  if (set.gamma == 0.0) {
    zeta.setZero();
    return zeta;
  }
  if (set.kind == PerturbationSet::Kind::Box) {
    for (int l = 0; l < L; ++l) zeta[l] = set.gamma * (2.0 * rng.uniform01() - 1.0);
  } else {
    Vec g(L);
    double norm2 = 0.0;
    do {
      for (int l = 0; l < L; ++l) g[l] = rng.gaussian();
      norm2 = g.squaredNorm();
    } while (norm2 == 0.0);
    const double radius = set.gamma * std::pow(rng.uniform01(), 1.0 / L);
    zeta = (radius / std::sqrt(norm2)) * (set.sigma.array() * g.array()).matrix();
  }
  if (!set.contains(zeta, 1e-9)) throw std::logic_error("sample left the perturbation set");
  return zeta;
}

GeometricProgram propagateParameters(const ParameterizedProgram& prog,
                                     std::vector<UncertainParameter>& params) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].nominal <= 0.0)
      throw std::invalid_argument("parameter " + params[p].name + " needs a positive nominal");
    params[p].pertId = static_cast<int>(p);
  }
  auto convert = [&params](const RawPosynomial& rp) {
    Posynomial out;
    out.terms.reserve(rp.terms.size());
    for (const auto& rt : rp.terms) {
      Monomial m;
      m.a = rt.varExp;
      m.b = rt.logCoeff;
      for (const auto& [p, e] : rt.paramExp.entries()) {
        const auto& par = params[static_cast<std::size_t>(p)];
        m.b += e * std::log(par.nominal);
        if (par.rho > 0.0) m.pert.bCols.add(par.pertId, e * std::log1p(par.rho));
      }
      out.terms.push_back(std::move(m));
    }
    return out;
  };
  GeometricProgram gp;
  gp.numVars = static_cast<int>(prog.varNames.size());
  gp.varNames = prog.varNames;
  gp.designVars = prog.designVars;
  gp.objective = convert(prog.objective);
  for (const auto& c : prog.inequalities) gp.inequalities.push_back(convert(c));
  return gp;
}

}  // namespace rgp
