// modelfile.cpp: recursive-descent parser, printer and compiler.
#include "rgp/modelfile.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace rgp {

ModelParseError::ModelParseError(int line, int col, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ", col " +
                         std::to_string(col) + ": " + msg),
      line(line),
      col(col) {}

namespace {

struct Token {
  enum Kind {
    Ident, Number, Plus, Minus, Star, Slash, Caret, Eq, Le, Percent,
    Newline, End
  };
  Kind kind = End;
  std::string text;
  double value = 0.0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skipBlanks();
    Token t;
    t.line = line_;
    t.col = col();
    if (pos_ >= text_.size()) return t;  // End
    const char c = text_[pos_];
    if (c == '\n') {
      ++pos_;
      ++line_;
      lineStart_ = pos_;
      t.kind = Token::Newline;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t s = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        ++pos_;
      t.kind = Token::Ident;
      t.text = text_.substr(s, pos_ - s);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      t.value = std::strtod(text_.c_str() + pos_, &end);
      if (end == text_.c_str() + pos_)
        throw ModelParseError(t.line, t.col, "malformed number");
      pos_ = static_cast<std::size_t>(end - text_.c_str());
      t.kind = Token::Number;
      return t;
    }
    ++pos_;
    switch (c) {
      case '+': t.kind = Token::Plus; return t;
      case '-': t.kind = Token::Minus; return t;
      case '*': t.kind = Token::Star; return t;
      case '/': t.kind = Token::Slash; return t;
      case '^': t.kind = Token::Caret; return t;
      case '%': t.kind = Token::Percent; return t;
      case '=': t.kind = Token::Eq; return t;
      case '<':
        if (pos_ < text_.size() && text_[pos_] == '=') {
          ++pos_;
          t.kind = Token::Le;
          return t;
        }
        throw ModelParseError(t.line, t.col, "expected '<='");
      default:
        throw ModelParseError(t.line, t.col,
                              std::string("unexpected character '") + c + "'");
    }
  }

 private:
  void skipBlanks() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }
  int col() const { return static_cast<int>(pos_ - lineStart_) + 1; }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t lineStart_ = 0;
  int line_ = 1;
};

const std::set<std::string>& reservedWords() {
  static const std::set<std::string> words = {"var", "param", "min",
                                              "st",  "design", "pm"};
  return words;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) { advance(); }

  ModelFile parse() {
    int lastLine = 1;
    while (cur_.kind != Token::End) {
      lastLine = cur_.line;
      if (cur_.kind == Token::Newline) {
        advance();
        continue;
      }
      statement();
    }
    if (!haveObjective_)
      throw ModelParseError(lastLine, 1, "missing 'min' statement");
    return std::move(mf_);
  }

 private:
  void advance() { cur_ = lex_.next(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ModelParseError(cur_.line, cur_.col, msg);
  }

  Token expect(Token::Kind kind, const std::string& what) {
    if (cur_.kind != kind) fail("expected " + what);
    Token t = cur_;
    advance();
    return t;
  }

  void endOfLine() {
    if (cur_.kind != Token::Newline && cur_.kind != Token::End)
      fail("unexpected token at end of statement");
  }

  void statement() {
    if (cur_.kind != Token::Ident) fail("expected a statement keyword");
    const Token kw = cur_;
    advance();
    if (kw.text == "var") {
      varStatement();
    } else if (kw.text == "param") {
      paramStatement();
    } else if (kw.text == "min") {
      if (haveObjective_)
        throw ModelParseError(kw.line, kw.col, "duplicate objective");
      mf_.objective = expression();
      haveObjective_ = true;
      endOfLine();
    } else if (kw.text == "st") {
      FilePosynomial lhs = expression();
      expect(Token::Le, "'<='");
      FilePosynomial rhs = expression();
      endOfLine();
      mf_.constraints.emplace_back(std::move(lhs), std::move(rhs));
    } else {
      throw ModelParseError(kw.line, kw.col,
                            "unknown statement '" + kw.text + "'");
    }
  }

  std::string declName() {
    const Token t = expect(Token::Ident, "an identifier");
    if (reservedWords().count(t.text))
      throw ModelParseError(t.line, t.col, "'" + t.text + "' is reserved");
    if (names_.count(t.text))
      throw ModelParseError(t.line, t.col, "duplicate identifier '" + t.text + "'");
    return t.text;
  }

  void varStatement() {
    const std::string name = declName();
    ModelVariable v{name, false};
    if (cur_.kind == Token::Ident) {
      if (cur_.text != "design") fail("expected 'design'");
      v.design = true;
      advance();
    }
    endOfLine();
    names_[name] = {false, static_cast<int>(mf_.variables.size())};
    mf_.variables.push_back(std::move(v));
  }

  void paramStatement() {
    const std::string name = declName();
    expect(Token::Eq, "'='");
    if (cur_.kind == Token::Minus) fail("parameter nominal must be positive");
    const Token nominal = expect(Token::Number, "a number");
    const Token pm = expect(Token::Ident, "'pm'");
    if (pm.text != "pm")
      throw ModelParseError(pm.line, pm.col, "expected 'pm'");
    const Token width = expect(Token::Number, "a number");
    expect(Token::Percent, "'%'");
    endOfLine();
    names_[name] = {true, static_cast<int>(mf_.parameters.size())};
    mf_.parameters.push_back({name, nominal.value, width.value});
  }

  FilePosynomial expression() {
    FilePosynomial p;
    p.terms.push_back(product());
    while (cur_.kind == Token::Plus) {
      advance();
      p.terms.push_back(product());
    }
    return p;
  }

  FileMonomial product() {
    if (cur_.kind == Token::Minus)
      fail("negative literal coefficient (posynomials only)");
    FileMonomial m;
    factorInto(m, 1.0);
    while (cur_.kind == Token::Star || cur_.kind == Token::Slash) {
      const bool invert = cur_.kind == Token::Slash;
      advance();
      factorInto(m, invert ? -1.0 : 1.0);
    }
    return m;
  }

  void factorInto(FileMonomial& m, double mult) {
    if (cur_.kind == Token::Ident) {
      const Token t = cur_;
      advance();
      const auto it = names_.find(t.text);
      if (it == names_.end())
        throw ModelParseError(t.line, t.col,
                              "undeclared identifier '" + t.text + "'");
      const double e = mult * exponent();
      if (it->second.first)
        m.paramExp.add(it->second.second, e);
      else
        m.varExp.add(it->second.second, e);
    } else if (cur_.kind == Token::Number) {
      const Token t = cur_;
      advance();
      if (t.value <= 0.0)
        throw ModelParseError(t.line, t.col,
                              "literal coefficients must be positive");
      const double e = mult * exponent();
      m.coeff *= e == 1.0 ? t.value : std::pow(t.value, e);
    } else {
      fail("expected an identifier or a number");
    }
  }

  double exponent() {
    if (cur_.kind != Token::Caret) return 1.0;
    advance();
    double sign = 1.0;
    if (cur_.kind == Token::Minus) {
      sign = -1.0;
      advance();
    }
    const Token t = expect(Token::Number, "a literal exponent");
    return sign * t.value;
  }

  Lexer lex_;
  Token cur_;
  ModelFile mf_;
  bool haveObjective_ = false;
  std::map<std::string, std::pair<bool, int>> names_;  // isParam, index
};

std::string fmtDouble(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void printPosy(std::ostringstream& os, const ModelFile& mf,
               const FilePosynomial& p) {
  for (std::size_t t = 0; t < p.terms.size(); ++t) {
    if (t > 0) os << " + ";
    const FileMonomial& m = p.terms[t];
    std::vector<std::string> factors;
    if (m.coeff != 1.0 || (m.varExp.empty() && m.paramExp.empty()))
      factors.push_back(fmtDouble(m.coeff));
    auto names = [&factors](const SparseRow& exps, auto name) {
      for (const auto& [i, e] : exps.entries())
        factors.push_back(e == 1.0 ? name(i) : name(i) + "^" + fmtDouble(e));
    };
    names(m.varExp, [&mf](int i) { return mf.variables[i].name; });
    names(m.paramExp, [&mf](int i) { return mf.parameters[i].name; });
    for (std::size_t f = 0; f < factors.size(); ++f)
      os << (f > 0 ? "*" : "") << factors[f];
  }
}

}  // namespace

ModelFile parseModel(const std::string& text) { return Parser(text).parse(); }

std::string prettyPrint(const ModelFile& mf) {
  std::ostringstream os;
  for (const ModelVariable& v : mf.variables)
    os << "var " << v.name << (v.design ? " design" : "") << "\n";
  for (const ModelParameter& p : mf.parameters)
    os << "param " << p.name << " = " << fmtDouble(p.nominal) << " pm "
       << fmtDouble(p.rhoPercent) << "%\n";
  os << "min ";
  printPosy(os, mf, mf.objective);
  os << "\n";
  for (const auto& [lhs, rhs] : mf.constraints) {
    os << "st ";
    printPosy(os, mf, lhs);
    os << " <= ";
    printPosy(os, mf, rhs);
    os << "\n";
  }
  return os.str();
}

bool sameModel(const ModelFile& a, const ModelFile& b) {
  auto samePosy = [](const FilePosynomial& p, const FilePosynomial& q) {
    if (p.terms.size() != q.terms.size()) return false;
    for (std::size_t t = 0; t < p.terms.size(); ++t)
      if (p.terms[t].coeff != q.terms[t].coeff ||
          !(p.terms[t].varExp == q.terms[t].varExp) ||
          !(p.terms[t].paramExp == q.terms[t].paramExp))
        return false;
    return true;
  };
  if (a.variables.size() != b.variables.size() ||
      a.parameters.size() != b.parameters.size() ||
      a.constraints.size() != b.constraints.size())
    return false;
  for (std::size_t i = 0; i < a.variables.size(); ++i)
    if (a.variables[i].name != b.variables[i].name ||
        a.variables[i].design != b.variables[i].design)
      return false;
  for (std::size_t i = 0; i < a.parameters.size(); ++i)
    if (a.parameters[i].name != b.parameters[i].name ||
        a.parameters[i].nominal != b.parameters[i].nominal ||
        a.parameters[i].rhoPercent != b.parameters[i].rhoPercent)
      return false;
  if (!samePosy(a.objective, b.objective)) return false;
  for (std::size_t i = 0; i < a.constraints.size(); ++i)
    if (!samePosy(a.constraints[i].first, b.constraints[i].first) ||
        !samePosy(a.constraints[i].second, b.constraints[i].second))
      return false;
  return true;
}

CompiledModel compileModel(const ModelFile& mf) {
  ParameterizedProgram prog;
  for (const ModelVariable& v : mf.variables) {
    if (v.design)
      prog.designVars.push_back(static_cast<int>(prog.varNames.size()));
    prog.varNames.push_back(v.name);
  }
  auto toRaw = [](const FileMonomial& m) {
    RawMonomial out;
    out.varExp = m.varExp;
    out.paramExp = m.paramExp;
    out.logCoeff = std::log(m.coeff);
    return out;
  };
  for (const FileMonomial& m : mf.objective.terms)
    prog.objective.terms.push_back(toRaw(m));
  for (std::size_t i = 0; i < mf.constraints.size(); ++i) {
    const auto& [lhs, rhs] = mf.constraints[i];
    if (rhs.terms.size() != 1)
      throw std::invalid_argument(
          "constraint " + std::to_string(i + 1) +
          ": right-hand side must be a single monomial");
    const RawMonomial div = toRaw(rhs.terms[0]);
    RawPosynomial posy;
    for (const FileMonomial& m : lhs.terms) {
      RawMonomial t = toRaw(m);
      t.varExp.axpy(-1.0, div.varExp);
      t.paramExp.axpy(-1.0, div.paramExp);
      t.varExp.prune();
      t.paramExp.prune();
      t.logCoeff -= div.logCoeff;
      posy.terms.push_back(std::move(t));
    }
    prog.inequalities.push_back(std::move(posy));
  }
  CompiledModel out;
  for (const ModelParameter& p : mf.parameters)
    out.params.push_back({p.name, p.nominal, p.rhoPercent / 100.0, -1});
  out.gp = propagateParameters(prog, out.params);
  return out;
}

}  // namespace rgp
