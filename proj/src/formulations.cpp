#include "rgp/formulations.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace rgp {

namespace {

constexpr double kDropF = 1e-14;  // half-space slopes below this are noise

using Kind = PerturbationSet::Kind;

// ---------------------------------------------------------------------------
// Effective categorization.  An elliptical budget couples every uncertain
// coordinate of a posynomial through one 2-norm, so the class-wise methods
// treat the union of its uncertain classes as a single class; certain
// classes keep their structural split.  Box budgets decouple coordinate-wise
// and keep the structural classes.
// ---------------------------------------------------------------------------

struct Effective {
  GeometricProgram gp;
  std::vector<CategorizedPosynomial> posys;
};

Effective effectiveCat(const CategorizedProgram& cat, const PerturbationSet& set) {
  Effective e;
  if (set.kind == Kind::Box) {
    e.gp = cat.gp;
    e.posys = cat.posynomials;
    return e;
  }
  e.gp = cat.gp;
  e.gp.numVars = cat.baseVars;
  e.gp.varNames.resize(static_cast<std::size_t>(cat.baseVars));
  for (const auto& cp : cat.posynomials) {
    const Posynomial& p = e.gp.inequalities[static_cast<std::size_t>(cp.source)];
    CategorizedPosynomial out;
    out.source = cp.source;
    std::vector<int> merged;
    for (const auto& tc : cp.classes) {
      if (tc.uncertainCount > 0)
        merged.insert(merged.end(), tc.members.begin(), tc.members.end());
      else
        out.classes.push_back(tc);
    }
    if (!merged.empty()) {
      std::sort(merged.begin(), merged.end());
      TermClass tc;
      tc.members = std::move(merged);
      const std::size_t n = tc.members.size();
      tc.cat = n == 1 ? ClassCat::M : (n == 2 ? ClassCat::N : ClassCat::P);
      tc.consistent = consistentDependence(p, tc.members);
      for (int k : tc.members)
        if (!p.terms[static_cast<std::size_t>(k)].certain()) ++tc.uncertainCount;
      out.classes.push_back(std::move(tc));
    }
    std::sort(out.classes.begin(), out.classes.end(),
              [](const TermClass& a, const TermClass& b) {
                return a.members.front() < b.members.front();
              });
    for (std::size_t j = 0; j < out.classes.size(); ++j) {
      out.classes[j].tVar =
          out.classes.size() >= 2
              ? e.gp.addVar("_tm" + std::to_string(cp.source) + "_" + std::to_string(j))
              : -1;
    }
    e.posys.push_back(std::move(out));
  }
  return e;
}

// Raw program without class epigraph variables, for the class-blind methods.
GeometricProgram baseProgram(const CategorizedProgram& cat) {
  GeometricProgram gp = cat.gp;
  gp.numVars = cat.baseVars;
  gp.varNames.resize(static_cast<std::size_t>(cat.baseVars));
  return gp;
}

// ---------------------------------------------------------------------------
// Builder: accumulates the emitted program with provenance and registries.
// ---------------------------------------------------------------------------

class Builder {
 public:
  Builder(const GeometricProgram& gp, const PerturbationSet& set, Method m)
      : set_(set) {
    if (gp.objective.K() != 1 || !gp.objective.terms[0].certain())
      throw std::invalid_argument(
          "formulation: objective must be a certain monomial (epigraph form)");
    rp_.method = m;
    rp_.program.numVars = gp.numVars;
    rp_.program.cost = gp.objective.terms[0].a;
    rp_.varNames = gp.varNames;
    rp_.sources = static_cast<int>(gp.inequalities.size());
  }

  const PerturbationSet& set() const { return set_; }

  int alloc(const std::string& name, std::vector<int>& group) {
    const int v = rp_.program.numVars++;
    rp_.varNames.push_back(name);
    group.push_back(v);
    return v;
  }
  int allocT(const std::string& n) { return alloc(n, rp_.aux.t); }
  int allocZ(const std::string& n) { return alloc(n, rp_.aux.z); }
  int allocS(const std::string& n) { return alloc(n, rp_.aux.s); }
  int allocW(const std::string& n) { return alloc(n, rp_.aux.w); }
  VarAllocator wAllocator() {
    return [this](const std::string& n) { return alloc(n, rp_.aux.w); };
  }

  void addLinear(LinearCon c, int src) {
    rp_.program.linear.push_back(std::move(c));
    rp_.provenance.linear.push_back(src);
  }
  void addLse(LseCon c, int src) {
    rp_.program.lse.push_back(std::move(c));
    rp_.provenance.lse.push_back(src);
  }
  void addSoc(SocCon c, int src) {
    rp_.program.soc.push_back(std::move(c));
    rp_.provenance.soc.push_back(src);
  }
  void addSig(SignomialConstraint c, int src) {
    rp_.signomials.push_back(std::move(c));
    rp_.provenance.sig.push_back(src);
  }
  void addRobust(const RobustLinearResult& r, int src) {
    for (const auto& c : r.linear) addLinear(c, src);
    for (const auto& c : r.soc) addSoc(c, src);
  }

  void usedPwl(int r) {
    rp_.rUsed = std::max(rp_.rUsed, r);
    approx_ = true;
  }
  void markApprox() { approx_ = true; }

  RobustProgram take() {
    rp_.emittedCount = static_cast<int>(rp_.program.constraintCount() +
                                        rp_.signomials.size());
    if (!rp_.signomials.empty())
      rp_.kind = RobustProgram::Kind::Signomial;
    else if (!rp_.program.soc.empty())
      rp_.kind = RobustProgram::Kind::Conic;
    else
      rp_.kind = RobustProgram::Kind::GP;
    rp_.exact = !approx_;
    return std::move(rp_);
  }

 private:
  const PerturbationSet& set_;
  RobustProgram rp_;
  bool approx_ = false;
};

// ---------------------------------------------------------------------------
// Shared class emission paths.
// ---------------------------------------------------------------------------

enum class ClassPath { Plain, Exact, RobustMono, TwoTermPath, Heavy };

bool coefficientOnlyTerms(const Posynomial& p, const std::vector<int>& members) {
  for (int k : members)
    if (!p.terms[static_cast<std::size_t>(k)].pert.aCols.empty()) return false;
  return true;
}

ClassPath classify(const Posynomial& p, const TermClass& tc,
                   const PerturbationSet& set) {
  if (tc.uncertainCount == 0) return ClassPath::Plain;
  if (tc.members.size() == 1) return ClassPath::RobustMono;
  const bool coeffOnly = coefficientOnlyTerms(p, tc.members);
  if (tc.uncertainCount == 1 && coeffOnly) return ClassPath::Exact;
  if (set.kind == Kind::Box && tc.consistent) return ClassPath::Exact;
  if (tc.members.size() == 2) return ClassPath::TwoTermPath;
  return ClassPath::Heavy;
}

// Exact sup of one coefficient-only monomial's log over the set.
double exactMargin(const Monomial& m, const PerturbationSet& set) {
  if (set.kind == Kind::Box) {
    double s = 0.0;
    for (const auto& [l, bl] : m.pert.bCols.entries()) {
      (void)l;
      s += std::abs(bl);
    }
    return set.gamma * s;
  }
  double sq = 0.0;
  for (const auto& [l, bl] : m.pert.bCols.entries())
    sq += set.sigma[l] * set.sigma[l] * bl * bl;
  return set.gamma * std::sqrt(sq);
}

SparseRow rowMinusVar(const SparseRow& a, int rhsVar) {
  SparseRow row = a;
  if (rhsVar >= 0) row.add(rhsVar, -1.0);
  return row;
}

void emitPlain(Builder& B, const Posynomial& p, const std::vector<int>& members,
               int rhs, int src) {
  if (members.size() == 1) {
    const Monomial& m = p.terms[static_cast<std::size_t>(members[0])];
    B.addLinear({rowMinusVar(m.a, rhs), m.b}, src);
    return;
  }
  LseCon c;
  for (int k : members) {
    const Monomial& m = p.terms[static_cast<std::size_t>(k)];
    c.terms.emplace_back(rowMinusVar(m.a, rhs), m.b);
  }
  B.addLse(std::move(c), src);
}

void emitRobustMono(Builder& B, const Monomial& m, int rhs, int src) {
  AffineData d = AffineData::fromMonomial(m);
  if (rhs >= 0) d.a0.add(rhs, -1.0);
  B.addRobust(robustify(d, B.set(), B.wAllocator()), src);
}

// Distributed sup: one constraint with each member's exact margin folded in.
void emitExactClass(Builder& B, const Posynomial& p,
                    const std::vector<int>& members, int rhs, int src) {
  if (members.size() == 1) {
    emitRobustMono(B, p.terms[static_cast<std::size_t>(members[0])], rhs, src);
    return;
  }
  LseCon c;
  for (int k : members) {
    const Monomial& m = p.terms[static_cast<std::size_t>(k)];
    c.terms.emplace_back(rowMinusVar(m.a, rhs), m.b + exactMargin(m, B.set()));
  }
  B.addLse(std::move(c), src);
}

void emitTwoTermClass(Builder& B, const Posynomial& p,
                      const std::vector<int>& members, int rhs, int src, int r,
                      bool safe) {
  B.usedPwl(r);
  const Monomial& m1 = p.terms[static_cast<std::size_t>(members[0])];
  const Monomial& m2 = p.terms[static_cast<std::size_t>(members[1])];
  B.addRobust(robustifyTwoTerm(AffineData::fromMonomial(m1),
                               AffineData::fromMonomial(m2), rhs, B.set(), r,
                               safe, B.wAllocator()),
              src);
}

// ---------------------------------------------------------------------------
// Linearized Perturbations: half-space machinery for P-classes.
// ---------------------------------------------------------------------------

// One side constraint sum_k f_k v_k <= exp(scale * x[var]), split by the sign
// of f; a mixed-sign column becomes the two signomials +/-(f.v) <= rhs.
void emitSides(Builder& B, const Posynomial& p,
               const std::vector<std::pair<int, double>>& column, int var,
               double scale, int src) {
  std::vector<std::pair<int, double>> pos, neg;
  for (const auto& [k, f] : column) {
    if (f > 0)
      pos.emplace_back(k, f);
    else
      neg.emplace_back(k, -f);
  }
  auto lseOf = [&](const std::vector<std::pair<int, double>>& part) {
    LseCon c;
    for (const auto& [k, f] : part) {
      const Monomial& m = p.terms[static_cast<std::size_t>(k)];
      SparseRow row = m.a;
      row.add(var, -scale);
      c.terms.emplace_back(std::move(row), m.b + std::log(f));
    }
    return c;
  };
  if (neg.empty() || pos.empty()) {
    B.addLse(lseOf(pos.empty() ? neg : pos), src);
    return;
  }
  auto posyOf = [&](const std::vector<std::pair<int, double>>& part) {
    Posynomial out;
    for (const auto& [k, f] : part) {
      Monomial m;
      m.a = p.terms[static_cast<std::size_t>(k)].a;
      m.b = p.terms[static_cast<std::size_t>(k)].b + std::log(f);
      out.terms.push_back(std::move(m));
    }
    return out;
  };
  Monomial rhsMono;
  rhsMono.a.add(var, scale);
  Posynomial posP = posyOf(pos), negP = posyOf(neg);
  {
    SignomialConstraint sc;
    sc.lhs = posP;
    sc.rhs = negP;
    sc.rhs.terms.push_back(rhsMono);
    B.addSig(std::move(sc), src);
  }
  {
    SignomialConstraint sc;
    sc.lhs = negP;
    sc.rhs = posP;
    sc.rhs.terms.push_back(rhsMono);
    B.addSig(std::move(sc), src);
  }
}

void emitHeavyLP(Builder& B, const Posynomial& p, const TermClass& tc, int rhs,
                 int src) {
  if (!coefficientOnlyTerms(p, tc.members))
    throw std::invalid_argument(
        "linearized-perturbations: exponent uncertainty in a P-class");
  B.markApprox();
  const PerturbationSet& set = B.set();

  // Half-space per member over its own active coordinates, with the set's
  // per-coordinate radius folded into the fitted surface.
  struct Fit {
    int term;
    HalfSpace hs;
  };
  std::vector<Fit> fits;
  std::map<int, std::vector<std::pair<int, double>>> columns;  // coord -> (term, f)
  for (int k : tc.members) {
    const Monomial& m = p.terms[static_cast<std::size_t>(k)];
    std::vector<std::pair<int, double>> cols;
    for (const auto& [l, bl] : m.pert.bCols.entries()) {
      const double radius =
          set.kind == Kind::Box ? set.gamma : set.gamma * set.sigma[l];
      if (bl != 0.0 && radius > 0.0) cols.emplace_back(l, radius * bl);
    }
    Fit f{k, buildHalfSpace(cols)};
    for (const auto& [l, fl] : f.hs.f)
      if (std::abs(fl) > kDropF) columns[l].emplace_back(k, fl);
    fits.push_back(std::move(f));
  }

  LseCon main;
  for (const auto& f : fits) {
    const Monomial& m = p.terms[static_cast<std::size_t>(f.term)];
    main.terms.emplace_back(rowMinusVar(m.a, rhs), m.b + std::log(f.hs.g));
  }

  if (columns.empty()) {  // every slope vanished: plane bound only
    B.addLse(std::move(main), src);
    return;
  }

  if (set.kind == Kind::Box) {
    for (const auto& [l, col] : columns) {
      const int w =
          B.allocW("_lpw" + std::to_string(src) + "_" + std::to_string(l));
      SparseRow row;
      row.add(w, 1.0);
      main.terms.emplace_back(rowMinusVar(row, rhs), 0.0);
      emitSides(B, p, col, w, 1.0, src);
    }
    B.addLse(std::move(main), src);
    return;
  }

  const int s = B.allocS("_lps" + std::to_string(src));
  {
    SparseRow row;
    row.add(s, 0.5);
    main.terms.emplace_back(rowMinusVar(row, rhs), 0.0);
  }
  B.addLse(std::move(main), src);
  LseCon sumS;
  for (const auto& [l, col] : columns) {
    const int sl =
        B.allocS("_lps" + std::to_string(src) + "_" + std::to_string(l));
    SparseRow row;
    row.add(sl, 1.0);
    row.add(s, -1.0);
    sumS.terms.emplace_back(std::move(row), 0.0);
    emitSides(B, p, col, sl, 0.5, src);
  }
  B.addLse(std::move(sumS), src);
}

// ---------------------------------------------------------------------------
// Best Pairs emission for one fixed pairing.
// ---------------------------------------------------------------------------

const ClassPairing& findPairing(const Pairing& pairing, int posy, int cls) {
  for (const auto& cp : pairing)
    if (cp.posy == posy && cp.cls == cls) return cp;
  throw std::invalid_argument("best-pairs: pairing does not cover a P-class");
}

void emitHeavyBP(Builder& B, const Posynomial& p, int rhs, int src,
                 const ClassPairing& cp, int r, bool safe) {
  B.markApprox();
  LseCon budget;
  for (std::size_t q = 0; q < cp.pairs.size(); ++q) {
    const auto [i, j] = cp.pairs[q];
    const int z = B.allocZ("_bpz" + std::to_string(src) + "_" + std::to_string(q));
    SparseRow row;
    row.add(z, 1.0);
    budget.terms.emplace_back(rowMinusVar(row, rhs), 0.0);
    B.usedPwl(r);
    B.addRobust(
        robustifyTwoTerm(AffineData::fromMonomial(p.terms[static_cast<std::size_t>(i)]),
                         AffineData::fromMonomial(p.terms[static_cast<std::size_t>(j)]),
                         z, B.set(), r, safe, B.wAllocator()),
        src);
  }
  if (cp.leftover >= 0) {
    const Monomial& m = p.terms[static_cast<std::size_t>(cp.leftover)];
    if (m.pert.aCols.empty()) {
      budget.terms.emplace_back(rowMinusVar(m.a, rhs),
                                m.b + exactMargin(m, B.set()));
    } else {
      const int z = B.allocZ("_bpz" + std::to_string(src) + "_left");
      SparseRow row;
      row.add(z, 1.0);
      budget.terms.emplace_back(rowMinusVar(row, rhs), 0.0);
      emitRobustMono(B, m, z, src);
    }
  }
  B.addLse(std::move(budget), src);
}

// ---------------------------------------------------------------------------
// Class-driven emission shared by LP and BP.
// ---------------------------------------------------------------------------

void emitClasses(Builder& B, const Effective& eff, Method method, int r,
                 bool safe, const Pairing* pairing) {
  for (std::size_t pi = 0; pi < eff.posys.size(); ++pi) {
    const CategorizedPosynomial& cp = eff.posys[pi];
    const Posynomial& p = eff.gp.inequalities[static_cast<std::size_t>(cp.source)];
    if (p.K() == 0) continue;
    if (cp.classes.size() >= 2) {
      LseCon budget;
      for (const auto& tc : cp.classes) {
        SparseRow row;
        row.add(tc.tVar, 1.0);
        budget.terms.emplace_back(std::move(row), 0.0);
      }
      B.addLse(std::move(budget), cp.source);
    }
    for (std::size_t j = 0; j < cp.classes.size(); ++j) {
      const TermClass& tc = cp.classes[j];
      switch (classify(p, tc, B.set())) {
        case ClassPath::Plain:
          emitPlain(B, p, tc.members, tc.tVar, cp.source);
          break;
        case ClassPath::Exact:
          emitExactClass(B, p, tc.members, tc.tVar, cp.source);
          break;
        case ClassPath::RobustMono:
          emitRobustMono(B, p.terms[static_cast<std::size_t>(tc.members[0])],
                         tc.tVar, cp.source);
          break;
        case ClassPath::TwoTermPath:
          emitTwoTermClass(B, p, tc.members, tc.tVar, cp.source, r, safe);
          break;
        case ClassPath::Heavy:
          if (method == Method::LinearizedPerturbations) {
            emitHeavyLP(B, p, tc, tc.tVar, cp.source);
          } else {
            emitHeavyBP(B, p, tc.tVar, cp.source,
                        findPairing(*pairing, static_cast<int>(pi),
                                    static_cast<int>(j)),
                        r, safe);
          }
          break;
      }
    }
  }
}

bool programCoefficientOnly(const GeometricProgram& gp) {
  for (const auto& posy : gp.inequalities)
    for (const auto& t : posy.terms)
      if (!t.pert.aCols.empty()) return false;
  return true;
}

void verifyCount(const RobustProgram& rp, const GeometricProgram& base, int r) {
  if (!programCoefficientOnly(base)) return;  // aux w rows break the formula
  const int want = countConstraints(base, rp.method, r);
  if (rp.emittedCount != want)
    throw std::logic_error("formulation: emitted count disagrees with formula");
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points.
// ---------------------------------------------------------------------------

HalfSpace buildHalfSpace(const std::vector<std::pair<int, double>>& bCols) {
  HalfSpace hs;
  std::vector<std::pair<int, double>> cols;
  for (const auto& [l, b] : bCols)
    if (b != 0.0) cols.push_back({l, b});
  const int s = static_cast<int>(cols.size());
  if (s == 0) return hs;  // f empty, g = 1
  if (s > 20) {           // conservative coordinate-wise fallback
    double tot = 0.0;
    for (const auto& [l, b] : cols) tot += std::abs(b);
    hs.g = std::exp(tot);
    return hs;
  }

  const std::size_t nv = 1ULL << s;
  // Least squares min ||A theta - O||^2 with theta = (f, g), subject to
  // interpolation at the all-max and all-min vertices.  Sign vectors are
  // mutually orthogonal, so A^T A = 2^s I.
  Eigen::VectorXd atO = Eigen::VectorXd::Zero(s + 1);
  std::vector<double> values(nv);
  for (std::size_t mask = 0; mask < nv; ++mask) {
    double e = 0.0;
    for (int j = 0; j < s; ++j)
      e += ((mask >> j) & 1 ? 1.0 : -1.0) * cols[static_cast<std::size_t>(j)].second;
    const double v = std::exp(e);
    values[mask] = v;
    for (int j = 0; j < s; ++j)
      atO[j] += ((mask >> j) & 1 ? 1.0 : -1.0) * v;
    atO[s] += v;
  }

  double bAbs = 0.0;
  for (const auto& [l, b] : cols) bAbs += std::abs(b);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 3, s + 3);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 3);
  for (int j = 0; j <= s; ++j) kkt(j, j) = static_cast<double>(nv);
  rhs.head(s + 1) = atO;
  // Interpolation rows: zeta_M has sign(b_j), zeta_m = -zeta_M.
  for (int j = 0; j < s; ++j) {
    const double sj = cols[static_cast<std::size_t>(j)].second > 0 ? 1.0 : -1.0;
    kkt(s + 1, j) = sj;
    kkt(j, s + 1) = sj;
    kkt(s + 2, j) = -sj;
    kkt(j, s + 2) = -sj;
  }
  kkt(s + 1, s) = 1.0;
  kkt(s, s + 1) = 1.0;
  kkt(s + 2, s) = 1.0;
  kkt(s, s + 2) = 1.0;
  rhs[s + 1] = std::exp(bAbs);
  rhs[s + 2] = std::exp(-bAbs);
  Eigen::VectorXd sol = kkt.partialPivLu().solve(rhs);

  hs.f.reserve(static_cast<std::size_t>(s));
  for (int j = 0; j < s; ++j)
    hs.f.emplace_back(cols[static_cast<std::size_t>(j)].first, sol[j]);
  hs.g = sol[s];

  // Certify f.zeta + g >= value at every vertex; lift g on any violation.
  double worst = 0.0;
  for (std::size_t mask = 0; mask < nv; ++mask) {
    double plane = hs.g;
    for (int j = 0; j < s; ++j)
      plane += ((mask >> j) & 1 ? 1.0 : -1.0) * hs.f[static_cast<std::size_t>(j)].second;
    worst = std::min(worst, plane - values[mask]);
  }
  if (worst < 0) hs.g += -worst + 1e-12;
  return hs;
}

std::uint64_t pairingCount(int n) {
  if (n < 0 || n > 33) throw std::out_of_range("pairingCount: n outside [0, 33]");
  if (n <= 2) return 1;
  auto doubleFactorial = [](int k) {
    std::uint64_t r = 1;
    for (; k > 1; k -= 2) r *= static_cast<std::uint64_t>(k);
    return r;
  };
  if (n % 2 == 0) return doubleFactorial(n - 1);
  return static_cast<std::uint64_t>(n) * doubleFactorial(n - 2);
}

RobustProgram twoTermFormulation(const CategorizedProgram& cat,
                                 const PerturbationSet& set, int r, bool safe) {
  const GeometricProgram base = baseProgram(cat);
  Builder B(base, set, Method::TwoTerm);
  for (std::size_t i = 0; i < base.inequalities.size(); ++i) {
    const Posynomial& p = base.inequalities[i];
    const int src = static_cast<int>(i);
    const std::size_t K = p.K();
    if (K == 0) continue;
    if (K == 1) {
      emitRobustMono(B, p.terms[0], -1, src);
      continue;
    }
    if (K == 2) {
      B.usedPwl(r);
      B.addRobust(robustifyTwoTerm(AffineData::fromMonomial(p.terms[0]),
                                   AffineData::fromMonomial(p.terms[1]), -1,
                                   set, r, safe, B.wAllocator()),
                  src);
      continue;
    }
    // Chain: {M_0, e^{c_0}} <= 1, {M_j, e^{c_j}} <= e^{c_{j-1}},
    // {M_{K-2}, M_{K-1}} <= e^{c_{K-3}}.
    std::vector<int> chain;
    for (std::size_t j = 0; j + 2 < K; ++j)
      chain.push_back(B.allocT("_ttc" + std::to_string(i) + "_" + std::to_string(j)));
    for (std::size_t j = 0; j + 1 < K; ++j) {
      const int rhs = j == 0 ? -1 : chain[j - 1];
      AffineData y1 = AffineData::fromMonomial(p.terms[j]);
      AffineData y2;
      if (j + 2 < K)
        y2.a0.add(chain[j], 1.0);
      else
        y2 = AffineData::fromMonomial(p.terms[K - 1]);
      B.usedPwl(r);
      B.addRobust(robustifyTwoTerm(y1, y2, rhs, set, r, safe, B.wAllocator()), src);
    }
  }
  RobustProgram rp = B.take();
  verifyCount(rp, base, r);
  return rp;
}

RobustProgram simpleConservative(const CategorizedProgram& cat,
                                 const PerturbationSet& set) {
  const GeometricProgram base = baseProgram(cat);
  Builder B(base, set, Method::SimpleConservative);
  bool exact = true;
  for (std::size_t i = 0; i < base.inequalities.size(); ++i) {
    const Posynomial& p = base.inequalities[i];
    const int src = static_cast<int>(i);
    const std::size_t K = p.K();
    if (K == 0) continue;
    int uncertain = 0;
    for (const auto& t : p.terms)
      if (!t.certain()) ++uncertain;
    if (K == 1) {
      emitRobustMono(B, p.terms[0], -1, src);
      continue;
    }
    std::vector<int> all(K);
    for (std::size_t k = 0; k < K; ++k) all[k] = static_cast<int>(k);
    if (uncertain > 1 &&
        !(set.kind == Kind::Box && consistentDependence(p, all)))
      exact = false;
    LseCon budget;
    for (std::size_t k = 0; k < K; ++k) {
      const int u = B.allocT("_sct" + std::to_string(i) + "_" + std::to_string(k));
      SparseRow row;
      row.add(u, 1.0);
      budget.terms.emplace_back(std::move(row), 0.0);
      emitRobustMono(B, p.terms[k], u, src);
    }
    B.addLse(std::move(budget), src);
  }
  RobustProgram rp = B.take();
  rp.exact = exact;
  verifyCount(rp, base, 0);
  return rp;
}

RobustProgram linearizedPerturbations(const CategorizedProgram& cat,
                                      const PerturbationSet& set, int r,
                                      bool safe) {
  const Effective eff = effectiveCat(cat, set);
  Builder B(eff.gp, set, Method::LinearizedPerturbations);
  emitClasses(B, eff, Method::LinearizedPerturbations, r, safe, nullptr);
  return B.take();
}

RobustProgram bestPairsProgram(const CategorizedProgram& cat,
                               const PerturbationSet& set,
                               const Pairing& pairing, int r, bool safe) {
  const Effective eff = effectiveCat(cat, set);
  Builder B(eff.gp, set, Method::BestPairs);
  emitClasses(B, eff, Method::BestPairs, r, safe, &pairing);
  return B.take();
}

Pairing randomPairing(const CategorizedProgram& cat, const PerturbationSet& set,
                      std::uint64_t seed) {
  const Effective eff = effectiveCat(cat, set);
  Pairing out;
  SampleRng root(seed);
  for (std::size_t pi = 0; pi < eff.posys.size(); ++pi) {
    const CategorizedPosynomial& cp = eff.posys[pi];
    const Posynomial& p = eff.gp.inequalities[static_cast<std::size_t>(cp.source)];
    for (std::size_t j = 0; j < cp.classes.size(); ++j) {
      const TermClass& tc = cp.classes[j];
      if (classify(p, tc, set) != ClassPath::Heavy) continue;
      ClassPairing cpair;
      cpair.posy = static_cast<int>(pi);
      cpair.cls = static_cast<int>(j);
      std::vector<int> mem = tc.members;
      SampleRng rng = root.fork(pi * 65599 + j);
      for (std::size_t a = mem.size() - 1; a > 0; --a) {
        const std::size_t b =
            static_cast<std::size_t>(rng.uniform01() * static_cast<double>(a + 1));
        std::swap(mem[a], mem[std::min(b, a)]);
      }
      std::size_t k = 0;
      for (; k + 1 < mem.size(); k += 2)
        cpair.pairs.emplace_back(std::min(mem[k], mem[k + 1]),
                                 std::max(mem[k], mem[k + 1]));
      if (k < mem.size()) cpair.leftover = mem[k];
      std::sort(cpair.pairs.begin(), cpair.pairs.end());
      out.push_back(std::move(cpair));
    }
  }
  return out;
}

namespace {

// Exact sup of an affine-data piece at fixed x (margins in log space).
double marginAt(const AffineData& d, const PerturbationSet& set, const Vec& x) {
  if (set.kind == Kind::Box) {
    double s = 0.0;
    std::vector<int> coords;
    for (const auto& [l, bl] : d.bCols.entries()) coords.push_back(l);
    for (const auto& [l, row] : d.aCols) coords.push_back(l);
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    for (int l : coords) {
      double slope = d.bCols.get(l);
      for (const auto& [cl, row] : d.aCols)
        if (cl == l) slope += row.dot(x);
      s += std::abs(slope);
    }
    return set.gamma * s;
  }
  double sq = 0.0;
  std::vector<int> coords;
  for (const auto& [l, bl] : d.bCols.entries()) coords.push_back(l);
  for (const auto& [l, row] : d.aCols) coords.push_back(l);
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  for (int l : coords) {
    double slope = d.bCols.get(l);
    for (const auto& [cl, row] : d.aCols)
      if (cl == l) slope += row.dot(x);
    sq += set.sigma[l] * set.sigma[l] * slope * slope;
  }
  return set.gamma * std::sqrt(sq);
}

double termSupLog(const Monomial& m, const PerturbationSet& set, const Vec& x) {
  const AffineData d = AffineData::fromMonomial(m);
  return d.a0.dot(x) + d.b0 + marginAt(d, set, x);
}

// Robust upper bound of the emitted two-term block at x: max over pieces.
double pairSupLog(const Monomial& m1, const Monomial& m2,
                  const PerturbationSet& set, int r, bool safe, const Vec& x) {
  const PwlApprox& pwl = buildPwl(r);
  const AffineData d1 = AffineData::fromMonomial(m1);
  const AffineData d2 = AffineData::fromMonomial(m2);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < r; ++i) {
    const double w2 = pwl.slope[i];
    AffineData piece = AffineData::combine(1.0 - w2, d1, w2, d2);
    piece.b0 += pwl.offset[i] + (safe ? pwl.eps : 0.0);
    best = std::max(best, piece.a0.dot(x) + piece.b0 + marginAt(piece, set, x));
  }
  return best;
}

struct MatchOut {
  std::vector<std::pair<int, int>> pairs;  // indices into the member list
  int leftover = -1;
};

MatchOut minWeightMatching(const Eigen::MatrixXd& W) {
  const int n = static_cast<int>(W.rows());  // even by construction
  MatchOut out;
  if (n <= 16) {
    const std::size_t full = (1ULL << n) - 1;
    std::vector<double> dp(full + 1, std::numeric_limits<double>::infinity());
    std::vector<int> pick(full + 1, -1);
    dp[0] = 0.0;
    for (std::size_t mask = 0; mask < full; ++mask) {
      if (!std::isfinite(dp[mask])) continue;
      int i = 0;
      while (mask & (1ULL << i)) ++i;
      for (int j = i + 1; j < n; ++j) {
        if (mask & (1ULL << j)) continue;
        const std::size_t nm = mask | (1ULL << i) | (1ULL << j);
        const double c = dp[mask] + W(i, j);
        if (c < dp[nm]) {
          dp[nm] = c;
          pick[nm] = i | (j << 8);
        }
      }
    }
    std::size_t mask = full;
    while (mask) {
      const int enc = pick[mask];
      const int i = enc & 0xff, j = enc >> 8;
      out.pairs.emplace_back(i, j);
      mask &= ~((1ULL << i) | (1ULL << j));
    }
    std::reverse(out.pairs.begin(), out.pairs.end());
    return out;
  }
  // Greedy for very large classes: repeatedly take the lightest pair.
  std::vector<bool> usedNode(static_cast<std::size_t>(n), false);
  std::vector<std::tuple<double, int, int>> cand;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) cand.emplace_back(W(i, j), i, j);
  std::sort(cand.begin(), cand.end());
  for (const auto& [w, i, j] : cand) {
    if (usedNode[static_cast<std::size_t>(i)] || usedNode[static_cast<std::size_t>(j)])
      continue;
    usedNode[static_cast<std::size_t>(i)] = usedNode[static_cast<std::size_t>(j)] = true;
    out.pairs.emplace_back(i, j);
  }
  return out;
}

ClassPairing repairClass(const Effective& eff, const ClassPairing& cur,
                         const PerturbationSet& set, const Vec& x,
                         const BestPairsOptions& opts, int iter) {
  const CategorizedPosynomial& cp = eff.posys[static_cast<std::size_t>(cur.posy)];
  const Posynomial& p = eff.gp.inequalities[static_cast<std::size_t>(cp.source)];
  const std::vector<int>& mem = cp.classes[static_cast<std::size_t>(cur.cls)].members;
  const int n0 = static_cast<int>(mem.size());
  const bool odd = n0 % 2 != 0;
  const int n = n0 + (odd ? 1 : 0);

  auto weightPair = [&](int a, int b) {
    return std::exp(std::min(
        pairSupLog(p.terms[static_cast<std::size_t>(mem[static_cast<std::size_t>(a)])],
                   p.terms[static_cast<std::size_t>(mem[static_cast<std::size_t>(b)])],
                   set, opts.r, opts.safe, x),
        600.0));
  };
  auto weightSingle = [&](int a) {
    return std::exp(std::min(
        termSupLog(p.terms[static_cast<std::size_t>(mem[static_cast<std::size_t>(a)])], set, x),
        600.0));
  };

  ClassPairing next;
  next.posy = cur.posy;
  next.cls = cur.cls;

  if (opts.samplePairings > 0) {
    // Sampled subset of pairings (plus the incumbent), per the option.
    auto evalPairing = [&](const ClassPairing& cand) {
      double tot = 0.0;
      for (const auto& [i, j] : cand.pairs) {
        int ia = -1, ib = -1;
        for (int q = 0; q < n0; ++q) {
          if (mem[static_cast<std::size_t>(q)] == i) ia = q;
          if (mem[static_cast<std::size_t>(q)] == j) ib = q;
        }
        tot += weightPair(ia, ib);
      }
      if (cand.leftover >= 0) {
        for (int q = 0; q < n0; ++q)
          if (mem[static_cast<std::size_t>(q)] == cand.leftover)
            tot += weightSingle(q);
      }
      return tot;
    };
    ClassPairing best = cur;
    double bestW = evalPairing(cur);
    SampleRng rng(opts.seed ^ 0x5bf03635u);
    SampleRng local = rng.fork(static_cast<std::uint64_t>(iter) * 7919 +
                               static_cast<std::uint64_t>(cur.posy) * 131 +
                               static_cast<std::uint64_t>(cur.cls));
    for (int t = 0; t < opts.samplePairings; ++t) {
      std::vector<int> shuffled = mem;
      for (std::size_t a = shuffled.size() - 1; a > 0; --a) {
        const std::size_t b = static_cast<std::size_t>(
            local.uniform01() * static_cast<double>(a + 1));
        std::swap(shuffled[a], shuffled[std::min(b, a)]);
      }
      ClassPairing cand;
      cand.posy = cur.posy;
      cand.cls = cur.cls;
      std::size_t k = 0;
      for (; k + 1 < shuffled.size(); k += 2)
        cand.pairs.emplace_back(std::min(shuffled[k], shuffled[k + 1]),
                                std::max(shuffled[k], shuffled[k + 1]));
      if (k < shuffled.size()) cand.leftover = shuffled[k];
      std::sort(cand.pairs.begin(), cand.pairs.end());
      const double w = evalPairing(cand);
      if (w < bestW) {
        bestW = w;
        best = cand;
      }
    }
    return best;
  }

  Eigen::MatrixXd W(n, n);
  W.setZero();
  for (int a = 0; a < n0; ++a)
    for (int b = a + 1; b < n0; ++b) W(a, b) = W(b, a) = weightPair(a, b);
  if (odd)
    for (int a = 0; a < n0; ++a) W(a, n0) = W(n0, a) = weightSingle(a);
  const MatchOut mo = minWeightMatching(W);
  for (const auto& [a, b] : mo.pairs) {
    if (odd && b == n0) {
      next.leftover = mem[static_cast<std::size_t>(a)];
      continue;
    }
    if (odd && a == n0) {
      next.leftover = mem[static_cast<std::size_t>(b)];
      continue;
    }
    const int u = mem[static_cast<std::size_t>(a)], v = mem[static_cast<std::size_t>(b)];
    next.pairs.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(next.pairs.begin(), next.pairs.end());
  return next;
}

bool samePairing(const Pairing& a, const Pairing& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].posy != b[i].posy || a[i].cls != b[i].cls ||
        a[i].pairs != b[i].pairs || a[i].leftover != b[i].leftover)
      return false;
  }
  return true;
}

}  // namespace

BestPairsResult bestPairs(const CategorizedProgram& cat,
                          const PerturbationSet& set,
                          const BestPairsOptions& opts) {
  BestPairsResult out;
  Pairing pairing = randomPairing(cat, set, opts.seed);
  const Effective eff = effectiveCat(cat, set);

  bool have = false;
  double prevLog = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opts.maxIters; ++it) {
    RobustProgram prog = bestPairsProgram(cat, set, pairing, opts.r, opts.safe);
    SolveResult res = solveConvex(prog.program, opts.solver);
    if (!res.ok()) {
      out.solverFailed = true;
      if (!have) {
        out.program = std::move(prog);
        out.solution = std::move(res);
        out.pairing = pairing;
      }
      break;
    }
    if (have &&
        res.logObjective > prevLog + 1e-9 * std::max(1.0, std::abs(prevLog)))
      break;  // would ascend: keep the previous accepted point
    prevLog = res.logObjective;
    out.program = std::move(prog);
    out.solution = std::move(res);
    out.pairing = pairing;
    out.trace.push_back(out.solution.objective);
    have = true;
    if (it == opts.maxIters || pairing.empty()) break;
    Pairing next;
    for (const auto& cp : pairing)
      next.push_back(repairClass(eff, cp, set, out.solution.x, opts, it));
    if (samePairing(next, pairing)) break;
    pairing = std::move(next);
  }
  out.iterations = static_cast<int>(out.trace.size());
  return out;
}

AuditReport conservativenessAudit(const std::map<Method, double>& objectives,
                                  double tol) {
  auto need = [&](Method m) {
    auto it = objectives.find(m);
    if (it == objectives.end())
      throw std::invalid_argument("conservativenessAudit: missing result for " +
                                  methodName(m));
    return it->second;
  };
  AuditReport rep;
  rep.simpleConservative = need(Method::SimpleConservative);
  rep.linearizedPerturbations = need(Method::LinearizedPerturbations);
  rep.twoTerm = need(Method::TwoTerm);
  rep.bestPairs = need(Method::BestPairs);
  rep.lpWithinSc =
      rep.linearizedPerturbations <= rep.simpleConservative * (1.0 + tol);
  rep.bpWithinTt = rep.bestPairs <= rep.twoTerm * (1.0 + tol);
  rep.pass = rep.lpWithinSc && rep.bpWithinTt;
  return rep;
}

}  // namespace rgp
