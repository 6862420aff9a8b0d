// rgp_main.cpp: command-line driver for the robust GP toolkit.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rgp/modelfile.hpp"
#include "rgp/simulate.hpp"

namespace {

using nlohmann::json;

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void writeOut(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

struct Loaded {
  rgp::CompiledModel model;
  rgp::CategorizedProgram cat;  // of the epigraph inequality form
  int L = 0;                    // perturbation dimension
};

Loaded load(const std::string& path) {
  Loaded ld;
  ld.model = rgp::compileModel(rgp::parseModel(readFile(path)));
  const rgp::GeometricProgram base =
      rgp::toEpigraphForm(rgp::toInequalityForm(ld.model.gp));
  ld.cat = rgp::categorize(base);
  ld.L = rgp::perturbationDimension(ld.model.gp);
  return ld;
}

rgp::PerturbationSet::Kind kindFromName(const std::string& name) {
  if (name == "box") return rgp::PerturbationSet::Kind::Box;
  if (name == "elliptical") return rgp::PerturbationSet::Kind::Elliptical;
  throw std::invalid_argument("unknown set '" + name + "'");
}

rgp::PerturbationSet makeSet(const std::string& name, int L, double gamma) {
  return kindFromName(name) == rgp::PerturbationSet::Kind::Box
             ? rgp::PerturbationSet::box(L, gamma)
             : rgp::PerturbationSet::elliptical(L, gamma);
}

int exitFor(rgp::SolveStatus s) {
  if (s == rgp::SolveStatus::Optimal) return 0;
  if (s == rgp::SolveStatus::Infeasible) return 2;
  return 1;
}

json varsJson(const rgp::GeometricProgram& gp, const rgp::Vec& x) {
  json vars = json::object();
  for (int v = 0; v < gp.numVars && v < x.size(); ++v)
    vars[gp.varName(v)] = std::exp(x[v]);
  return vars;
}

std::vector<double> parseGammas(const std::string& text) {
  std::vector<double> out;
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    double start = 0, step = 0, stop = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' ||
        step <= 0)
      throw std::invalid_argument("bad gamma range '" + text + "'");
    for (double g = start; g <= stop + 1e-12 * std::max(1.0, std::abs(stop));
         g += step)
      out.push_back(g);
    return out;
  }
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<rgp::Method> parseMethods(const std::string& text) {
  if (text == "all")
    return {rgp::Method::TwoTerm, rgp::Method::SimpleConservative,
            rgp::Method::LinearizedPerturbations, rgp::Method::BestPairs};
  std::vector<rgp::Method> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(rgp::methodFromName(item));
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

std::vector<int> scheduleFor(int r) {
  if (r > 0) return {r};
  return {10, 20, 40, 80, 100};
}

// Shared option block for the robustify/simulate/compare commands.
struct RobustArgs {
  std::string model, method = "simple", set = "box", output, config;
  double gamma = 1.0, gapTol = 1e-3;
  int r = 0;
  std::uint64_t seed = 0;
};

void addRobustFlags(CLI::App* cmd, RobustArgs& a, bool withMethod = true) {
  cmd->add_option("model", a.model, "model file")->required();
  if (withMethod)
    cmd->add_option("--method", a.method,
                    "two-term|simple|linperts|best-pairs");
  cmd->add_option("--set", a.set, "box|elliptical");
  cmd->add_option("--gamma", a.gamma, "uncertainty set size");
  cmd->add_option("--r", a.r, "fixed PWL piece count (0: gap-driven)");
  cmd->add_option("--gap-tol", a.gapTol, "relative PWL bracket tolerance");
  cmd->add_option("--seed", a.seed, "root seed for all randomness");
  cmd->add_option("--output,-o", a.output, "output path (default stdout)");
  cmd->add_option("--config", a.config,
                  "flat key=value config; flags override");
}

// Flat key=value config: '#' comment lines, blank lines ignored, keys match
// long flag names. Values given on the command line win over the file.
struct ConfigBinding {
  CLI::App* cmd = nullptr;
  const std::string* path = nullptr;
  std::map<std::string, std::function<void(const std::string&)>> apply;
};

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void applyConfig(const ConfigBinding& b) {
  if (!b.path || b.path->empty()) return;
  std::istringstream in(readFile(*b.path));
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineNo) +
                               ": expected key=value");
    const std::string key = trimmed(t.substr(0, eq));
    const std::string value = trimmed(t.substr(eq + 1));
    const auto it = b.apply.find(key);
    if (it == b.apply.end())
      throw std::runtime_error("config line " + std::to_string(lineNo) +
                               ": unknown key '" + key + "'");
    if (b.cmd->count("--" + key) > 0) continue;
    it->second(value);
  }
}

void bindRobust(ConfigBinding& b, CLI::App* cmd, RobustArgs& a,
                bool withMethod = true) {
  b.cmd = cmd;
  b.path = &a.config;
  if (withMethod)
    b.apply["method"] = [&a](const std::string& v) { a.method = v; };
  b.apply["set"] = [&a](const std::string& v) { a.set = v; };
  b.apply["gamma"] = [&a](const std::string& v) { a.gamma = std::stod(v); };
  b.apply["r"] = [&a](const std::string& v) { a.r = std::stoi(v); };
  b.apply["gap-tol"] = [&a](const std::string& v) { a.gapTol = std::stod(v); };
  b.apply["seed"] = [&a](const std::string& v) { a.seed = std::stoull(v); };
  b.apply["output"] = [&a](const std::string& v) { a.output = v; };
}

int runSolve(const RobustArgs& a) {
  const Loaded ld = load(a.model);
  rgp::GeometricProgram nom =
      rgp::realize(ld.model.gp, rgp::Vec::Zero(ld.L));
  nom = rgp::toInequalityForm(nom);
  if (nom.objective.K() != 1) nom = rgp::toEpigraphForm(nom);
  const rgp::SolveResult res = rgp::solveConvex(rgp::toConvexProgram(nom));
  json out = {{"command", "solve"},
              {"status", rgp::statusName(res.status)},
              {"objective", res.objective},
              {"log_objective", res.logObjective},
              {"iterations", res.iterations},
              {"variables", varsJson(ld.model.gp, res.x)}};
  writeOut(a.output, out.dump(2) + "\n");
  if (res.ok())
    std::cerr << "nominal objective " << res.objective << "\n";
  return exitFor(res.status);
}

json robustJson(const RobustArgs& a, const rgp::RobustSolve& rs,
                const Loaded& ld) {
  const char* kinds[] = {"gp", "conic", "signomial"};
  return {{"method", a.method},
          {"set", a.set},
          {"gamma", a.gamma},
          {"status", rgp::statusName(rs.result.status)},
          {"objective", rs.result.objective},
          {"log_objective", rs.result.logObjective},
          {"n_constraints", rs.program.emittedCount},
          {"r", rs.r},
          {"gap", rs.gap},
          {"kind", kinds[static_cast<int>(rs.program.kind)]},
          {"exact", rs.program.exact},
          {"variables", varsJson(ld.model.gp, rs.result.x)}};
}

int runRobustify(const RobustArgs& a) {
  const Loaded ld = load(a.model);
  const rgp::PerturbationSet set = makeSet(a.set, ld.L, a.gamma);
  const rgp::RobustSolve rs =
      rgp::solveRobust(ld.cat, rgp::methodFromName(a.method), set,
                       scheduleFor(a.r), a.gapTol, {}, a.seed);
  json out = robustJson(a, rs, ld);
  out["command"] = "robustify";
  writeOut(a.output, out.dump(2) + "\n");
  return exitFor(rs.result.status);
}

int runSimulate(const RobustArgs& a, int samples, bool nominal) {
  const Loaded ld = load(a.model);
  const rgp::PerturbationSet set = makeSet(a.set, ld.L, a.gamma);
  json out = {{"command", "simulate"},
              {"set", a.set},
              {"gamma", a.gamma},
              {"samples", samples}};
  rgp::SolveResult design;
  if (nominal) {
    rgp::GeometricProgram nom =
        rgp::realize(ld.model.gp, rgp::Vec::Zero(ld.L));
    nom = rgp::toInequalityForm(nom);
    if (nom.objective.K() != 1) nom = rgp::toEpigraphForm(nom);
    design = rgp::solveConvex(rgp::toConvexProgram(nom));
    out["method"] = "nominal";
  } else {
    const rgp::RobustSolve rs =
        rgp::solveRobust(ld.cat, rgp::methodFromName(a.method), set,
                         scheduleFor(a.r), a.gapTol, {}, a.seed);
    design = rs.result;
    out["method"] = a.method;
    out["r"] = rs.r;
  }
  out["design_status"] = rgp::statusName(design.status);
  out["design_objective"] = design.objective;
  if (!design.ok()) {
    writeOut(a.output, out.dump(2) + "\n");
    return exitFor(design.status);
  }
  const rgp::Vec x = design.x.head(ld.model.gp.numVars);
  const rgp::SimulationReport rep =
      rgp::simulate(ld.model.gp, x, set, samples, a.seed);
  out["failures"] = rep.failures;
  out["numerical_failures"] = rep.numericalFailures;
  out["pfail"] = rep.pFail;
  out["pfail_low"] = rep.pFailLow;
  out["pfail_high"] = rep.pFailHigh;
  out["mean_objective"] = rep.meanObjective;
  writeOut(a.output, out.dump(2) + "\n");
  return 0;
}

int runSweep(const RobustArgs& a, const std::string& gammas,
             const std::string& methods, int samples,
             const std::string& jsonPath) {
  const Loaded ld = load(a.model);
  rgp::SweepOptions so;
  so.methods = parseMethods(methods);
  so.kind = kindFromName(a.set);
  so.grid = parseGammas(gammas);
  if (a.r > 0) so.rSchedule = {a.r};
  so.gapTol = a.gapTol;
  so.nSamples = samples;
  so.seed = a.seed;
  const rgp::SweepResult sweep = rgp::gammaSweep(ld.model.gp, so);
  writeOut(a.output, rgp::sweepCsv(sweep));
  if (!jsonPath.empty()) {
    json cells = json::array();
    for (const rgp::SweepCell& c : sweep.cells)
      cells.push_back({{"gamma", c.gamma},
                       {"method", rgp::methodName(c.method)},
                       {"status", rgp::statusName(c.status)},
                       {"objective", c.objective},
                       {"pfail", c.pFail},
                       {"pfail_low", c.pFailLow},
                       {"pfail_high", c.pFailHigh},
                       {"mean_obj", c.meanObjective},
                       {"n_constraints", c.nConstraints},
                       {"r", c.r},
                       {"wall_ms", c.wallMs}});
    writeOut(jsonPath, json{{"command", "sweep"}, {"set", a.set},
                            {"cells", cells}}
                           .dump(2) +
                       "\n");
  }
  for (const rgp::SweepCell& c : sweep.cells)
    if (c.status == rgp::SolveStatus::Infeasible) return 2;
  return 0;
}

int runCompare(const RobustArgs& a) {
  const Loaded ld = load(a.model);
  const rgp::PerturbationSet set = makeSet(a.set, ld.L, a.gamma);
  const std::vector<rgp::Method> methods = parseMethods("all");
  std::map<rgp::Method, double> objectives;
  json detail = json::object();
  int worst = 0;
  for (rgp::Method m : methods) {
    const rgp::RobustSolve rs = rgp::solveRobust(
        ld.cat, m, set, scheduleFor(a.r), a.gapTol, {}, a.seed);
    RobustArgs ma = a;
    ma.method = rgp::methodName(m);
    detail[rgp::methodName(m)] = robustJson(ma, rs, ld);
    worst = std::max(worst, exitFor(rs.result.status));
    if (rs.result.ok()) objectives[m] = rs.result.objective;
  }
  json out = {{"command", "compare"},
              {"set", a.set},
              {"gamma", a.gamma},
              {"methods", detail}};
  if (objectives.size() == methods.size()) {
    const rgp::AuditReport audit = rgp::conservativenessAudit(objectives);
    out["audit"] = {{"lp_within_sc", audit.lpWithinSc},
                    {"bp_within_tt", audit.bpWithinTt},
                    {"pass", audit.pass}};
  }
  writeOut(a.output, out.dump(2) + "\n");
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust geometric programming toolkit"};
  app.require_subcommand(1);

  RobustArgs solveArgs, robArgs, simArgs, sweepArgs, cmpArgs;
  int samples = 1000, sweepSamples = 1000;
  bool nominal = false;
  std::string gammas = "0:0.2:1", methods = "all", jsonPath;

  CLI::App* solveCmd = app.add_subcommand("solve", "nominal solve");
  solveCmd->add_option("model", solveArgs.model, "model file")->required();
  solveCmd->add_option("--output,-o", solveArgs.output, "output path");
  solveCmd->add_option("--config", solveArgs.config,
                       "flat key=value config; flags override");
  ConfigBinding solveBind;
  solveBind.cmd = solveCmd;
  solveBind.path = &solveArgs.config;
  solveBind.apply["output"] = [&](const std::string& v) {
    solveArgs.output = v;
  };

  CLI::App* robCmd =
      app.add_subcommand("robustify", "build and solve a robust counterpart");
  addRobustFlags(robCmd, robArgs);
  ConfigBinding robBind;
  bindRobust(robBind, robCmd, robArgs);

  CLI::App* simCmd =
      app.add_subcommand("simulate", "Monte Carlo a fixed design");
  addRobustFlags(simCmd, simArgs);
  simCmd->add_option("--samples", samples, "realizations to draw");
  simCmd->add_flag("--nominal", nominal, "simulate the nominal design");
  ConfigBinding simBind;
  bindRobust(simBind, simCmd, simArgs);
  simBind.apply["samples"] = [&](const std::string& v) {
    samples = std::stoi(v);
  };
  simBind.apply["nominal"] = [&](const std::string& v) {
    nominal = (v == "1" || v == "true");
  };

  CLI::App* sweepCmd = app.add_subcommand("sweep", "gamma sweep to CSV");
  addRobustFlags(sweepCmd, sweepArgs, false);
  sweepCmd->add_option("--gammas", gammas, "grid: start:step:stop or list");
  sweepCmd->add_option("--methods", methods, "'all' or comma list");
  sweepCmd->add_option("--samples", sweepSamples, "realizations per cell");
  sweepCmd->add_option("--json", jsonPath, "also write a JSON report");
  ConfigBinding sweepBind;
  bindRobust(sweepBind, sweepCmd, sweepArgs, false);
  sweepBind.apply["gammas"] = [&](const std::string& v) { gammas = v; };
  sweepBind.apply["methods"] = [&](const std::string& v) { methods = v; };
  sweepBind.apply["samples"] = [&](const std::string& v) {
    sweepSamples = std::stoi(v);
  };
  sweepBind.apply["json"] = [&](const std::string& v) { jsonPath = v; };

  CLI::App* cmpCmd =
      app.add_subcommand("compare", "all methods + conservativeness audit");
  addRobustFlags(cmpCmd, cmpArgs, false);
  ConfigBinding cmpBind;
  bindRobust(cmpBind, cmpCmd, cmpArgs, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Contract: 0 success, 2 infeasible, 1 any error (including bad flags).
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    if (solveCmd->parsed()) {
      applyConfig(solveBind);
      return runSolve(solveArgs);
    }
    if (robCmd->parsed()) {
      applyConfig(robBind);
      return runRobustify(robArgs);
    }
    if (simCmd->parsed()) {
      applyConfig(simBind);
      return runSimulate(simArgs, samples, nominal);
    }
    if (sweepCmd->parsed()) {
      applyConfig(sweepBind);
      return runSweep(sweepArgs, gammas, methods, sweepSamples, jsonPath);
    }
    if (cmpCmd->parsed()) {
      applyConfig(cmpBind);
      return runCompare(cmpArgs);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
