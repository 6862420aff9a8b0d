// modelfile.hpp: text model format: parser, printer, compiler.
#ifndef RGP_MODELFILE_HPP
#define RGP_MODELFILE_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rgp/core.hpp"
#include "rgp/uncertainty.hpp"

namespace rgp {

// Grammar, one statement per line ('#' starts a comment):
//   var <name> [design]
//   param <name> = <float> pm <float>%
//   min <expr>
//   st <expr> <= <expr>
// <expr> is a sum of products of powers of declared identifiers and
// positive literals; '^' takes a (possibly negative) literal exponent and
// '/' inverts the following factor. Every identifier must be declared
// before use; negative literal coefficients are rejected (posynomials
// only). The right-hand side of `st` must compile to a single monomial.
struct ModelParseError : std::runtime_error {
  int line, col;
  ModelParseError(int line, int col, const std::string& msg);
};

struct ModelVariable {
  std::string name;
  bool design = false;
};

struct ModelParameter {
  std::string name;
  double nominal = 1.0;
  double rhoPercent = 0.0;  // half-width as written, e.g. 31.1 for 31.1%
};

// Expression-level monomial: coefficient kept as a value so printing and
// reparsing reproduce it bit-exactly.
struct FileMonomial {
  double coeff = 1.0;
  SparseRow varExp;    // indices into ModelFile.variables
  SparseRow paramExp;  // indices into ModelFile.parameters
};

struct FilePosynomial {
  std::vector<FileMonomial> terms;
};

struct ModelFile {
  std::vector<ModelVariable> variables;
  std::vector<ModelParameter> parameters;
  FilePosynomial objective;
  std::vector<std::pair<FilePosynomial, FilePosynomial>> constraints;  // lhs <= rhs
};

ModelFile parseModel(const std::string& text);

// Canonical rendering; parsing it back yields a bit-identical ModelFile,
// so pretty-printing is a fixed point.
std::string prettyPrint(const ModelFile& mf);

bool sameModel(const ModelFile& a, const ModelFile& b);

struct CompiledModel {
  GeometricProgram gp;
  std::vector<UncertainParameter> params;
};

// Divides each constraint by its right-hand monomial and attaches the
// parameter perturbations. Throws std::invalid_argument when a right-hand
// side is not a monomial.
CompiledModel compileModel(const ModelFile& mf);

}  // namespace rgp

#endif  // RGP_MODELFILE_HPP
