// models.cpp: the simple-wing benchmark and the synthetic generator.
#include "rgp/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "rgp/partition.hpp"

namespace rgp {

namespace {

RawMonomial term(double coeff,
                 std::initializer_list<std::pair<int, double>> vars,
                 std::initializer_list<std::pair<int, double>> pars = {}) {
  RawMonomial m;
  m.logCoeff = std::log(coeff);
  for (const auto& [v, e] : vars) m.varExp.add(v, e);
  for (const auto& [p, e] : pars) m.paramExp.add(p, e);
  return m;
}

void wingCheck(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("buildWing: ") + what);
}

int pick(SampleRng& rng, int n) {
  return std::min(n - 1, static_cast<int>(rng.uniform01() * n));
}

}  // namespace

WingModel buildWing() {
  enum Var { A, S, C_D, C_L, C_f, Re, W, W_W, V, D, kVars };
  enum Par {
    CDA0, k, S_wetratio, e, W_W_coeff2, W_W_coeff1, N_ult, W_0, tau, rho, mu,
    C_Lmax, V_min, kPars
  };

  WingModel wing;
  wing.params = {
      {"CDA0", 0.0350, 0.428, -1},       {"k", 1.170, 0.311, -1},
      {"S_wetratio", 2.075, 0.0361, -1}, {"e", 0.9200, 0.0760, -1},
      {"W_W_coeff2", 60.00, 0.660, -1},  {"W_W_coeff1", 12.0e-5, 0.600, -1},
      {"N_ult", 3.300, 0.333, -1},       {"W_0", 6250.0, 0.600, -1},
      {"tau", 0.1200, 0.333, -1},        {"rho", 1.230, 0.100, -1},
      {"mu", 1.775e-5, 0.0422, -1},      {"C_Lmax", 1.600, 0.250, -1},
      {"V_min", 25.00, 0.200, -1}};

  ParameterizedProgram prog;
  prog.varNames = {"A", "S", "C_D", "C_L", "C_f", "Re", "W", "W_W", "V", "D"};
  prog.designVars = {A, S};
  prog.objective.terms = {term(1.0, {{D, 1.0}})};

  // Drag coefficient: fuselage drag + wetted-area skin friction + induced.
  prog.inequalities.push_back(
      {{term(1.0, {{S, -1.0}, {C_D, -1.0}}, {{CDA0, 1.0}}),
        term(1.0, {{C_f, 1.0}, {C_D, -1.0}}, {{k, 1.0}, {S_wetratio, 1.0}}),
        term(1.0 / M_PI, {{C_L, 2.0}, {A, -1.0}, {C_D, -1.0}}, {{e, -1.0}})}});
  // Wing weight: surface term + structural bending term.
  prog.inequalities.push_back(
      {{term(1.0, {{S, 1.0}, {W_W, -1.0}}, {{W_W_coeff2, 1.0}}),
        term(1.0, {{A, 1.5}, {W, 0.5}, {S, 0.5}, {W_W, -1.0}},
             {{W_W_coeff1, 1.0}, {N_ult, 1.0}, {tau, -1.0}, {W_0, 0.5}})}});
  // Total drag definition (epigraph of the objective).
  prog.inequalities.push_back(
      {{term(0.5, {{S, 1.0}, {C_D, 1.0}, {V, 2.0}, {D, -1.0}}, {{rho, 1.0}})}});
  // Reynolds number consistency.
  prog.inequalities.push_back(
      {{term(1.0, {{Re, 1.0}, {V, -1.0}, {A, 0.5}, {S, -0.5}},
             {{mu, 1.0}, {rho, -1.0}})}});
  // Turbulent flat-plate skin friction (certain).
  prog.inequalities.push_back(
      {{term(0.074, {{Re, -0.2}, {C_f, -1.0}})}});
  // Level-flight lift equals weight.
  prog.inequalities.push_back(
      {{term(2.0, {{W, 1.0}, {S, -1.0}, {C_L, -1.0}, {V, -2.0}}, {{rho, -1.0}})}});
  // Stall: fly at the minimum speed with maximum lift coefficient.
  prog.inequalities.push_back(
      {{term(2.0, {{W, 1.0}, {S, -1.0}},
             {{rho, -1.0}, {C_Lmax, -1.0}, {V_min, -2.0}})}});
  // Total weight: everything else plus the wing.
  prog.inequalities.push_back(
      {{term(1.0, {{W, -1.0}}, {{W_0, 1.0}}),
        term(1.0, {{W_W, 1.0}, {W, -1.0}})}});

  wing.gp = propagateParameters(prog, wing.params);
  wing.varA = A;
  wing.varS = S;
  wing.varD = D;

  wingCheck(static_cast<int>(wing.params.size()) == kPars, "13 parameters");
  wingCheck(wing.gp.numVars == kVars, "10 variables");
  wingCheck(wing.gp.inequalities.size() == 8, "8 constraints");
  wingCheck(wing.gp.inequalities[0].K() == 3, "3-term drag posynomial");
  wingCheck(wing.gp.inequalities[1].K() == 2, "2-term wing-weight posynomial");
  int m = 0, n = 0, p = 0;
  for (const auto& posy : wing.gp.inequalities)
    (posy.K() == 1 ? m : posy.K() == 2 ? n : p) += 1;
  wingCheck(m == 5 && n == 2 && p == 1, "5 monomials, 2 two-term, 1 larger");
  const CategorizedProgram cat = categorize(wing.gp);
  for (const auto& cp : cat.posynomials)
    for (const auto& tc : cp.classes)
      wingCheck(tc.members.size() == 1, "all term classes are singletons");
  return wing;
}

SyntheticModel generateSynthetic(const SyntheticSpec& spec) {
  if (spec.numVars < 1 || spec.numConstraints < 1 || spec.maxTerms < 1 ||
      spec.numParams < 0 || spec.density < 0.0 || spec.density > 1.0)
    throw std::invalid_argument("generateSynthetic: bad spec");
  SampleRng rng(spec.seed);

  SyntheticModel out;
  out.params.reserve(static_cast<std::size_t>(spec.numParams));
  for (int j = 0; j < spec.numParams; ++j)
    out.params.push_back({"p" + std::to_string(j),
                          0.5 + 1.5 * rng.uniform01(),
                          0.05 + 0.25 * rng.uniform01(), -1});

  ParameterizedProgram prog;
  for (int v = 0; v < spec.numVars; ++v)
    prog.varNames.push_back("x" + std::to_string(v));

  out.plantedPoint = Vec(spec.numVars);
  for (int v = 0; v < spec.numVars; ++v)
    out.plantedPoint[v] = 2.0 * rng.uniform01() - 1.0;

  RawMonomial obj;
  for (int t = 0; t < std::min(3, spec.numVars); ++t)
    obj.varExp.add(pick(rng, spec.numVars), 2.0 * rng.uniform01() - 1.0);
  prog.objective.terms = {obj};

  const int poolSize = std::min(spec.numParams, 5);
  for (int i = 0; i < spec.numConstraints; ++i) {
    RawPosynomial posy;
    const int K = 1 + pick(rng, spec.maxTerms);
    for (int t = 0; t < K; ++t) {
      RawMonomial mono;
      const int nnz = 1 + pick(rng, 3);
      for (int z = 0; z < nnz; ++z)
        mono.varExp.add(pick(rng, spec.numVars), 4.0 * rng.uniform01() - 2.0);
      mono.logCoeff = 2.0 * rng.uniform01() - 1.0;
      for (int j = 0; j < poolSize; ++j)
        if (rng.uniform01() < spec.density) {
          const double mag = 0.5 + rng.uniform01();
          mono.paramExp.add((i * 3 + j) % spec.numParams,
                            rng.uniform01() < 0.5 ? -mag : mag);
        }
      posy.terms.push_back(std::move(mono));
    }
    prog.inequalities.push_back(std::move(posy));
  }
  // Log-space bounds |x_v| <= 4 keep every counterpart bounded.
  for (int v = 0; v < spec.numVars; ++v) {
    prog.inequalities.push_back({{term(1.0, {{v, 1.0}})}});
    prog.inequalities.back().terms[0].logCoeff = -4.0;
    prog.inequalities.push_back({{term(1.0, {{v, -1.0}})}});
    prog.inequalities.back().terms[0].logCoeff = -4.0;
  }

  out.gp = propagateParameters(prog, out.params);

  // Scale the generated posynomials so the planted point satisfies the box
  // gamma=1 worst case with 0.2 slack; subsets of that box stay feasible.
  for (int i = 0; i < spec.numConstraints; ++i) {
    Posynomial& posy = out.gp.inequalities[static_cast<std::size_t>(i)];
    double worst = 0.0;
    for (const Monomial& mono : posy.terms) {
      double margin = 0.0;
      for (const auto& [l, bl] : mono.pert.bCols.entries())
        margin += std::abs(bl);
      worst += std::exp(mono.a.dot(out.plantedPoint) + mono.b + margin);
    }
    if (!std::isfinite(worst) || worst <= 0.0)
      throw std::runtime_error("generateSynthetic: planting overflow");
    const double shift = std::log(0.8) - std::log(worst);
    for (Monomial& mono : posy.terms) mono.b += shift;
  }
  return out;
}

}  // namespace rgp
