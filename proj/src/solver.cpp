#include "rgp/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rgp {

std::string statusName(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIterations: return "max-iterations";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double linValue(const LinearCon& c, const Vec& x) { return c.a.dot(x) + c.b; }

double lseValue(const LseCon& c, const Vec& x) {
  double m = -kInf;
  for (const auto& [a, b] : c.terms) m = std::max(m, a.dot(x) + b);
  double s = 0.0;
  for (const auto& [a, b] : c.terms) s += std::exp(a.dot(x) + b - m);
  return m + std::log(s);
}

// Violation-style value ||v|| - u for a second-order cone constraint.
double socValue(const SocCon& c, const Vec& x) {
  double nv = 0.0;
  for (const auto& row : c.norm) {
    const double v = linValue(row, x);
    nv += v * v;
  }
  return std::sqrt(nv) + linValue(c.affine, x);  // ||v|| - u, u = -affine
}

void scatterOuter(const SparseRow& a, double w, Eigen::MatrixXd& H) {
  for (const auto& [i, vi] : a.entries())
    for (const auto& [j, vj] : a.entries()) H(i, j) += w * vi * vj;
}

void scatterAxpy(const SparseRow& a, double w, Vec& g) {
  for (const auto& [i, v] : a.entries()) g[i] += w * v;
}

// Barrier evaluation for min t*cost.x + F(x). Returns false outside domain.
class Barrier {
 public:
  explicit Barrier(const ConvexProgram& p) : p_(p) {}

  double complexity() const {
    return static_cast<double>(p_.linear.size() + p_.lse.size() +
                               2 * p_.soc.size());
  }

  bool value(const Vec& x, double t, double& phi) const {
    return evalImpl(x, t, phi, nullptr, nullptr);
  }

  bool derivatives(const Vec& x, double t, double& phi, Vec& grad,
                   Eigen::MatrixXd& hess) const {
    grad.setZero(x.size());
    hess.setZero(x.size(), x.size());
    return evalImpl(x, t, phi, &grad, &hess);
  }

 private:
  bool evalImpl(const Vec& x, double t, double& phi, Vec* grad,
                Eigen::MatrixXd* hess) const {
    const int n = static_cast<int>(x.size());
    phi = t * p_.cost.dot(x);
    if (grad) scatterAxpy(p_.cost, t, *grad);

    for (const auto& c : p_.linear) {
      const double g = linValue(c, x);
      if (g >= 0) return false;
      phi += -std::log(-g);
      if (grad) {
        scatterAxpy(c.a, 1.0 / (-g), *grad);
        scatterOuter(c.a, 1.0 / (g * g), *hess);
      }
    }

    Vec gbar(n);
    for (const auto& c : p_.lse) {
      double m = -kInf;
      for (const auto& [a, b] : c.terms) m = std::max(m, a.dot(x) + b);
      double s = 0.0;
      for (const auto& [a, b] : c.terms) s += std::exp(a.dot(x) + b - m);
      const double g = m + std::log(s);
      if (g >= 0) return false;
      phi += -std::log(-g);
      if (grad) {
        gbar.setZero();
        for (const auto& [a, b] : c.terms) {
          const double pk = std::exp(a.dot(x) + b - m) / s;
          scatterAxpy(a, pk, gbar);
          scatterOuter(a, pk / (-g), *hess);  // sum p_k a a^T / (-g)
        }
        *grad += gbar / (-g);
        // hess(phi) = hess(g)/(-g) + grad(g) grad(g)^T / g^2 with
        // hess(g) = sum p_k a a^T - gbar gbar^T; the first part is above.
        *hess += gbar * gbar.transpose() * (1.0 / (g * g) - 1.0 / (-g));
      }
    }

    Vec gradD(n);
    for (const auto& c : p_.soc) {
      const double u = -linValue(c.affine, x);
      if (u <= 0) return false;
      double nv2 = 0.0;
      std::vector<double> vals(c.norm.size());
      for (std::size_t i = 0; i < c.norm.size(); ++i) {
        vals[i] = linValue(c.norm[i], x);
        nv2 += vals[i] * vals[i];
      }
      const double D = u * u - nv2;
      if (D <= 0) return false;
      phi += -std::log(D);
      if (grad) {
        gradD.setZero();
        scatterAxpy(c.affine.a, -2.0 * u, gradD);  // d(u^2) = -2u a_u
        for (std::size_t i = 0; i < c.norm.size(); ++i)
          scatterAxpy(c.norm[i].a, -2.0 * vals[i], gradD);
        *grad += -gradD / D;
        scatterOuter(c.affine.a, -2.0 / D, *hess);  // -hess(D)/D, part 1
        for (const auto& row : c.norm) scatterOuter(row.a, 2.0 / D, *hess);
        *hess += gradD * gradD.transpose() / (D * D);
      }
    }
    return std::isfinite(phi);
  }

  const ConvexProgram& p_;
};

struct CenterOutcome {
  bool ok = false;
  std::string error;
};

using StopFn = std::function<bool(const Vec&, double)>;

// Damped Newton centering for fixed t. `stop` may end the loop early once
// its condition holds at an accepted iterate. Centering is declared done at
// a modest Newton decrement: path-following only needs lambda well below 1,
// and the final accuracy comes from the m/t gap, not from over-centering.
CenterOutcome center(const Barrier& B, double t, Vec& x, int& budget,
                     int& used, const StopFn& stop) {
  const int n = static_cast<int>(x.size());
  double phi;
  Vec grad(n);
  Eigen::MatrixXd H(n, n);
  for (; budget > 0; --budget, ++used) {
    if (!B.derivatives(x, t, phi, grad, H))
      return {false, "iterate left barrier domain"};

    // Solve H dx = -grad. H is PSD but frequently rank-deficient (the linear
    // cost adds no curvature), and LDLT can report success on a singular
    // system while returning an inconsistent solution. Always add a small
    // proximal ridge and validate the solve by its residual, escalating the
    // ridge until the direction is trustworthy.
    Vec dx(n);
    double lambda2 = -1.0;
    const double scale = std::max(1.0, H.trace() / n);
    // Attempt 0 is a nearly-unridged Newton solve: a trace-scaled base ridge
    // would crush curvature in flat directions whenever one constraint sits
    // close to its boundary (1/g^2 dominates the trace) and stall centering.
    // Escalation still climbs from a trace-scaled floor so wall-dominated
    // Hessians become solidly positive definite within a few attempts.
    double ridge = 1e-10;
    bool solved = false;
    for (int attempt = 0; attempt < 10 && !solved;
         ++attempt, ridge = std::max(ridge * 100.0, 1e-10 * scale)) {
      Eigen::MatrixXd Hr = H;
      Hr.diagonal().array() += ridge;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hr);
      if (ldlt.info() != Eigen::Success) continue;
      dx = ldlt.solve(-grad);
      if (!dx.allFinite()) continue;
      const double gnorm = grad.norm();
      const double resid = (Hr * dx + grad).norm();
      if (resid > 1e-6 * gnorm + 1e-12 * scale * dx.norm()) continue;
      lambda2 = -grad.dot(dx);
      if (lambda2 < 0) {
        // The ridged system is PD, so a negative decrement can only be
        // rounding noise near a stationary point.
        if (lambda2 < -1e-10 * (gnorm * dx.norm() + 1)) continue;
        lambda2 = 0;
      }
      solved = true;
    }
    if (!solved) return {false, "Newton system unsolvable"};
    if (lambda2 / 2 <= 1e-4) return {true, ""};

    // Cap very long steps (flat directions) so iterates stay at a sane scale.
    const double cap = 1e4 * (1.0 + x.norm());
    if (dx.norm() > cap) {
      dx *= cap / dx.norm();
      lambda2 = std::max(0.0, -grad.dot(dx));
    }

    double alpha = 1.0;
    const double slope = grad.dot(dx);  // = -lambda2 <= 0
    bool stepped = false;
    double phiNew = phi;
    while (alpha >= 1e-14) {
      Vec xn = x + alpha * dx;
      double phin;
      if (B.value(xn, t, phin) && phin <= phi + 0.01 * alpha * slope) {
        x = xn;
        phiNew = phin;
        stepped = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!stepped) {
      // No descent step available: accept current point if the decrement is
      // already small, otherwise report failure.
      if (lambda2 / 2 <= 1e-2) return {true, ""};
      return {false, "line search stalled"};
    }
    if (stop && stop(x, t)) return {true, ""};
    // When t is large, phi ~ t * cost and its accessible precision is
    // ~eps * |phi|; once steps can no longer change phi at this precision
    // and the decrement is modest, the point is as centered as doubles allow.
    const double floorTol =
        8 * std::numeric_limits<double>::epsilon() * (std::abs(phi) + 1);
    if (phi - phiNew <= floorTol && lambda2 / 2 <= 1e-2) return {true, ""};
  }
  return {false, "Newton budget exhausted"};
}

struct BarrierOutcome {
  bool ok = false;
  std::string error;
};

// `stepStop` is checked inside centering after every accepted step and may
// hold at arbitrary iterates; `roundStop` is checked at (approximately)
// centered points only, so it may rely on the m/t suboptimality bound.
BarrierOutcome barrierLoop(const Barrier& B, Vec& x, double t0, double gap,
                           int& budget, int& used, const StopFn& stepStop,
                           const StopFn& roundStop, double mu) {
  const double m = std::max(1.0, B.complexity());
  double t = t0;
  for (;;) {
    const CenterOutcome c = center(B, t, x, budget, used, stepStop);
    if (!c.ok) return {false, c.error};
    if (stepStop && stepStop(x, t)) return {true, ""};
    if (roundStop && roundStop(x, t)) return {true, ""};
    if (m / t <= gap) return {true, ""};
    t *= mu;
  }
}

// Adds a slack variable s (index n) so that every constraint becomes
// g_j(x) - s <= 0; minimizing s finds a strictly feasible point.
ConvexProgram augmentWithSlack(const ConvexProgram& p) {
  ConvexProgram a = p;
  const int s = p.numVars;
  a.numVars = p.numVars + 1;
  a.cost = SparseRow();
  a.cost.add(s, 1.0);
  for (auto& c : a.linear) c.a.add(s, -1.0);
  for (auto& c : a.lse)
    for (auto& [row, b] : c.terms) row.add(s, -1.0);
  for (auto& c : a.soc) c.affine.a.add(s, -1.0);
  return a;
}

double rawMaxValue(const ConvexProgram& p, const Vec& x) {
  double worst = -kInf;
  for (const auto& c : p.linear) worst = std::max(worst, linValue(c, x));
  for (const auto& c : p.lse) worst = std::max(worst, lseValue(c, x));
  for (const auto& c : p.soc) worst = std::max(worst, socValue(c, x));
  return worst;
}

}  // namespace

double maxViolation(const ConvexProgram& p, const Vec& x) {
  if (p.constraintCount() == 0) return 0.0;
  return std::max(0.0, rawMaxValue(p, x));
}

SolveResult solveConvex(const ConvexProgram& p, const SolverOptions& opts) {
  SolveResult res;
  res.x = Vec::Zero(p.numVars);
  int budget = opts.maxNewton;

  if (p.constraintCount() == 0) {
    if (!p.cost.entries().empty()) {
      res.status = SolveStatus::NumericalFailure;
      res.message = "unconstrained program with nonzero cost";
      return res;
    }
    res.status = SolveStatus::Optimal;
    return res;
  }

  // Phase I: minimize the feasibility slack. The slack subproblem is run
  // inside a box |x_i| <= B: without it, programs whose feasible set lets
  // every margin grow without bound stall centering (the barrier slides x
  // to infinity at fixed t instead of driving s negative). The box is only
  // a phase I device; if an infeasibility verdict presses against it, it is
  // enlarged and phase I retried.
  const int slackIdx = p.numVars;
  auto earlyFeasible = [slackIdx](const Vec& z, double) {
    return z[slackIdx] < -1e-4;
  };
  double maxAbsB = 0.0;
  for (const auto& c : p.linear) maxAbsB = std::max(maxAbsB, std::abs(c.b));
  for (const auto& c : p.lse)
    for (const auto& [row, b] : c.terms) maxAbsB = std::max(maxAbsB, std::abs(b));
  for (const auto& c : p.soc) {
    maxAbsB = std::max(maxAbsB, std::abs(c.affine.b));
    for (const auto& row : c.norm) maxAbsB = std::max(maxAbsB, std::abs(row.b));
  }

  Vec xs;
  BarrierOutcome ph1;
  for (double box = 64.0 + maxAbsB;; box *= 100.0) {
    ConvexProgram aug = augmentWithSlack(p);
    for (int i = 0; i < p.numVars; ++i) {
      LinearCon hi, lo;
      hi.a.add(i, 1.0);
      hi.b = -box;
      lo.a.add(i, -1.0);
      lo.b = -box;
      aug.linear.push_back(hi);
      aug.linear.push_back(lo);
    }
    Barrier phase1(aug);
    xs = Vec::Zero(aug.numVars);
    xs[slackIdx] = rawMaxValue(p, res.x) + 1.0;
    // At a centered point the slack exceeds its optimum by at most m/t (with
    // a factor-2 cushion for approximate centering), which certifies
    // infeasibility long before the barrier loop runs t out to the gap.
    const double mPh1 = std::max(1.0, phase1.complexity());
    const double thresh = opts.infeasThreshold;
    auto certified = [slackIdx, mPh1, thresh](const Vec& z, double t) {
      if (z[slackIdx] < -1e-4) return true;
      return z[slackIdx] - 2.0 * mPh1 / t > thresh;
    };
    ph1 = barrierLoop(phase1, xs, 1.0, opts.barrierGap, budget,
                      res.iterations, earlyFeasible, certified, opts.mu);
    if (!ph1.ok || xs[slackIdx] <= opts.infeasThreshold) break;
    const double pressed =
        p.numVars > 0 ? xs.head(p.numVars).cwiseAbs().maxCoeff() : 0.0;
    if (pressed < 0.99 * box || box > 1e8) break;
  }
  if (!ph1.ok) {
    res.status = SolveStatus::NumericalFailure;
    res.message = "phase I: " + ph1.error;
    return res;
  }
  const double slack = xs[slackIdx];
  if (slack > opts.infeasThreshold) {
    res.status = SolveStatus::Infeasible;
    res.x = xs.head(p.numVars);
    res.maxViolation = maxViolation(p, res.x);
    std::ostringstream os;
    os << "phase I slack " << slack;
    res.message = os.str();
    return res;
  }
  if (slack > -1e-12) {
    res.status = SolveStatus::NumericalFailure;
    res.x = xs.head(p.numVars);
    res.maxViolation = maxViolation(p, res.x);
    res.message = "feasible region has empty interior at this tolerance";
    return res;
  }

  // Phase II: barrier on the true cost from the strictly feasible point.
  res.x = xs.head(p.numVars);
  Barrier phase2(p);
  const BarrierOutcome ph2 = barrierLoop(phase2, res.x, 1.0, opts.barrierGap,
                                         budget, res.iterations, nullptr,
                                         nullptr, opts.mu);
  res.logObjective = p.cost.dot(res.x);
  res.objective = std::exp(std::min(res.logObjective, kOverflowThreshold));
  res.maxViolation = maxViolation(p, res.x);
  if (!ph2.ok) {
    res.status = (ph2.error == "Newton budget exhausted")
                     ? SolveStatus::MaxIterations
                     : SolveStatus::NumericalFailure;
    res.message = "phase II: " + ph2.error;
    return res;
  }
  res.status = SolveStatus::Optimal;
  return res;
}

ConvexProgram toConvexProgram(const GeometricProgram& gp) {
  for (const auto& posy : gp.inequalities)
    for (const auto& t : posy.terms)
      if (!t.certain())
        throw std::invalid_argument("toConvexProgram: program must be certain");
  if (!gp.equalities.empty())
    throw std::invalid_argument("toConvexProgram: run toInequalityForm first");
  if (gp.objective.K() != 1 || !gp.objective.terms[0].certain())
    throw std::invalid_argument("toConvexProgram: objective must be a monomial");

  ConvexProgram p;
  p.numVars = gp.numVars;
  p.cost = gp.objective.terms[0].a;
  for (const auto& posy : gp.inequalities) {
    if (posy.K() == 0) continue;
    if (posy.K() == 1) {
      p.linear.push_back({posy.terms[0].a, posy.terms[0].b});
    } else {
      LseCon c;
      for (const auto& t : posy.terms) c.terms.emplace_back(t.a, t.b);
      p.lse.push_back(std::move(c));
    }
  }
  return p;
}

SolveResult fixAndSolve(const GeometricProgram& gpIn,
                        const std::vector<std::pair<int, double>>& fixed,
                        const SolverOptions& opts) {
  for (const auto& posy : gpIn.inequalities)
    for (const auto& t : posy.terms)
      if (!t.certain())
        throw std::invalid_argument("fixAndSolve: realize the program first");
  GeometricProgram gp = toInequalityForm(gpIn);
  if (gp.objective.K() != 1) gp = toEpigraphForm(gp);

  std::vector<double> fixedVal(gp.numVars, 0.0);
  std::vector<bool> isFixed(gp.numVars, false);
  for (const auto& [v, val] : fixed) {
    if (v < 0 || v >= gp.numVars)
      throw std::out_of_range("fixAndSolve: variable index");
    isFixed[v] = true;
    fixedVal[v] = val;
  }
  std::vector<int> freeIdx(gp.numVars, -1);
  int nFree = 0;
  for (int v = 0; v < gp.numVars; ++v)
    if (!isFixed[v]) freeIdx[v] = nFree++;

  auto splitRow = [&](const SparseRow& a, double b) {
    SparseRow row;
    double c = b;
    for (const auto& [v, coef] : a.entries()) {
      if (isFixed[v])
        c += coef * fixedVal[v];
      else
        row.add(freeIdx[v], coef);
    }
    return std::make_pair(row, c);
  };

  ConvexProgram p;
  p.numVars = nFree;
  const Monomial& obj = gp.objective.terms[0];
  auto [costRow, costOffset] = splitRow(obj.a, obj.b);
  p.cost = costRow;

  SolveResult res;
  for (const auto& posy : gp.inequalities) {
    if (posy.K() == 1) {
      auto [row, b] = splitRow(posy.terms[0].a, posy.terms[0].b);
      if (row.entries().empty()) {
        if (b > opts.feasTol) {
          res.status = SolveStatus::Infeasible;
          res.message = "fixed variables violate a constraint";
          res.maxViolation = b;
          return res;
        }
        continue;
      }
      p.linear.push_back({row, b});
    } else if (posy.K() >= 2) {
      LseCon c;
      bool anyFree = false;
      for (const auto& t : posy.terms) {
        auto [row, b] = splitRow(t.a, t.b);
        anyFree = anyFree || !row.entries().empty();
        c.terms.emplace_back(row, b);
      }
      if (!anyFree) {
        const double g = lseValue(c, Vec::Zero(nFree));
        if (g > opts.feasTol) {
          res.status = SolveStatus::Infeasible;
          res.message = "fixed variables violate a constraint";
          res.maxViolation = g;
          return res;
        }
        continue;
      }
      p.lse.push_back(std::move(c));
    }
  }

  if (nFree == 0) {
    res.status = SolveStatus::Optimal;
    res.x = Vec::Zero(gp.numVars);
    for (int v = 0; v < gp.numVars; ++v) res.x[v] = fixedVal[v];
    res.logObjective = costOffset;
    res.objective = std::exp(res.logObjective);
    return res;
  }

  res = solveConvex(p, opts);
  Vec full = Vec::Zero(gp.numVars);
  for (int v = 0; v < gp.numVars; ++v)
    full[v] = isFixed[v] ? fixedVal[v] : (res.x.size() ? res.x[freeIdx[v]] : 0.0);
  res.x = full;
  res.logObjective += costOffset;
  res.objective = std::exp(std::min(res.logObjective, kOverflowThreshold));
  return res;
}

SignomialResult solveSignomial(const ConvexProgram& base,
                               const std::vector<SignomialConstraint>& sigs,
                               const std::vector<std::string>& varNames,
                               const Vec* start, const SolverOptions& opts) {
  (void)varNames;
  SignomialResult out;
  if (sigs.empty()) {
    out.result = solveConvex(base, opts);
    if (out.result.ok()) out.trace.push_back(out.result.objective);
    return out;
  }
  for (const auto& s : sigs)
    if (s.lhs.K() == 0 || s.rhs.K() == 0)
      throw std::invalid_argument("solveSignomial: empty signomial side");

  Vec xt;
  if (start && start->size() == base.numVars) {
    xt = *start;
  } else {
    SolveResult seed = solveConvex(base, opts);
    if (!seed.ok()) {
      out.result = seed;
      return out;
    }
    xt = seed.x;
  }

  double radius = opts.trustRadius;
  bool haveAccepted = false;
  double objT = kInf;
  SolveResult best;

  for (int outer = 0; outer < opts.spMaxIter; ++outer) {
    ++out.outerIterations;
    ConvexProgram prog = base;
    for (const auto& sig : sigs) {
      // Condense rhs at xt: log htilde = sum_k lam_k (a_k.x + b_k - log lam_k)
      // with lam_k the term shares of rhs(xt); htilde <= rhs with equality
      // at xt, so replacing rhs keeps the program a restriction.
      double m = -kInf;
      std::vector<double> y(sig.rhs.K());
      for (std::size_t k = 0; k < sig.rhs.K(); ++k) {
        y[k] = sig.rhs.terms[k].a.dot(xt) + sig.rhs.terms[k].b;
        m = std::max(m, y[k]);
      }
      double s = 0.0;
      for (double yk : y) s += std::exp(yk - m);
      SparseRow abar;
      double bbar = 0.0;
      for (std::size_t k = 0; k < sig.rhs.K(); ++k) {
        const double lam = std::exp(y[k] - m) / s;
        if (lam <= 0) continue;
        abar.axpy(lam, sig.rhs.terms[k].a);
        bbar += lam * (sig.rhs.terms[k].b - std::log(lam));
      }
      LseCon c;
      for (const auto& t : sig.lhs.terms) {
        SparseRow row = t.a;
        row.axpy(-1.0, abar);
        row.prune();
        c.terms.emplace_back(std::move(row), t.b - bbar);
      }
      prog.lse.push_back(std::move(c));
    }
    for (int v = 0; v < base.numVars; ++v) {
      SparseRow up, dn;
      up.add(v, 1.0);
      dn.add(v, -1.0);
      prog.linear.push_back({up, -(xt[v] + radius)});
      prog.linear.push_back({dn, xt[v] - radius});
    }

    SolveResult res = solveConvex(prog, opts);
    if (!res.ok()) {
      radius *= opts.trustShrink;
      if (radius < 1e-7) {
        if (haveAccepted) {
          out.result = best;
          out.result.status = SolveStatus::Optimal;
          return out;
        }
        out.result = res;
        out.result.message = "trust region collapsed: " + res.message;
        return out;
      }
      continue;
    }

    const double cand = res.logObjective;
    if (haveAccepted && cand > objT + 1e-12 * std::max(1.0, std::abs(objT))) {
      radius *= opts.trustShrink;  // reject ascent step
      if (radius < 1e-7) {
        out.result = best;
        out.result.status = SolveStatus::Optimal;
        return out;
      }
      continue;
    }

    const double prev = objT;
    xt = res.x;
    objT = cand;
    best = res;
    best.x = xt;
    out.trace.push_back(res.objective);
    if (haveAccepted &&
        std::abs(prev - cand) <= opts.spTol * std::max(1.0, std::abs(prev))) {
      out.result = best;
      out.result.status = SolveStatus::Optimal;
      return out;
    }
    haveAccepted = true;
  }
  out.result = best;
  out.result.status =
      haveAccepted ? SolveStatus::MaxIterations : SolveStatus::NumericalFailure;
  if (!haveAccepted) out.result.message = "no accepted sequential step";
  return out;
}

}  // namespace rgp
