#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lexer.hpp"
#include "volfair/lang.hpp"

namespace volfair::lang {

using detail::Tok;
using detail::Token;

namespace {

std::string format_error(SourceLoc loc, const std::string& message) {
  std::ostringstream out;
  out << "line " << loc.line << ", column " << loc.column << ": " << message;
  return out.str();
}

}  // namespace

ParseError::ParseError(SourceLoc loc, const std::string& message)
    : std::runtime_error(format_error(loc, message)), loc_(loc), detail_(message) {}

// ---------------------------------------------------------------------------
// Expressions

ExprPtr make_num(Rational v, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Num;
  e->num = std::move(v);
  e->loc = loc;
  return e;
}

ExprPtr make_var(const Var& v, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Var;
  e->name = v;
  e->loc = loc;
  return e;
}

ExprPtr make_bool(bool v, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Bool;
  e->truth = v;
  e->loc = loc;
  return e;
}

ExprPtr make_op(Expr::Op op, std::vector<ExprPtr> args, SourceLoc loc) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = std::move(args);
  e->loc = loc;
  return e;
}

bool is_bool(const Expr& e, const std::set<Var>& bool_vars) {
  switch (e.op) {
    case Expr::Op::Bool: return true;
    case Expr::Op::Var: return bool_vars.count(e.name) != 0;
    default: return e.is_comparison() || e.is_logical();
  }
}

void collect_vars(const Expr& e, std::set<Var>& out) {
  if (e.op == Expr::Op::Var) out.insert(e.name);
  for (const auto& a : e.args) collect_vars(*a, out);
}

ExprPtr rename(const ExprPtr& e, const std::map<Var, Var>& renaming) {
  if (e->op == Expr::Op::Var) {
    auto it = renaming.find(e->name);
    return it == renaming.end() ? e : make_var(it->second, e->loc);
  }
  if (e->args.empty()) return e;
  std::vector<ExprPtr> args;
  for (const auto& a : e->args) args.push_back(rename(a, renaming));
  return make_op(e->op, std::move(args), e->loc);
}

std::string to_string(const Expr& e) {
  static const std::map<Expr::Op, std::string> sym{
      {Expr::Op::Add, "+"}, {Expr::Op::Sub, "-"}, {Expr::Op::Mul, "*"},  {Expr::Op::Div, "/"},
      {Expr::Op::Lt, "<"},  {Expr::Op::Le, "<="}, {Expr::Op::Gt, ">"},   {Expr::Op::Ge, ">="},
      {Expr::Op::Eq, "=="}, {Expr::Op::Ne, "!="}, {Expr::Op::And, "and"}, {Expr::Op::Or, "or"}};
  switch (e.op) {
    case Expr::Op::Num: return volfair::to_string(e.num);
    case Expr::Op::Var: return e.name;
    case Expr::Op::Bool: return e.truth ? "True" : "False";
    case Expr::Op::Neg: return "-(" + to_string(*e.args[0]) + ")";
    case Expr::Op::Not: return "not (" + to_string(*e.args[0]) + ")";
    default: return "(" + to_string(*e.args[0]) + " " + sym.at(e.op) + " " + to_string(*e.args[1]) + ")";
  }
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct RawBlock {
  std::string name;
  bool has_params = false;
  std::vector<Var> params;
  std::vector<Stmt> body;
  Markers markers;
  std::optional<std::vector<Var>> returns;
  SourceLoc loc;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  SourceFile parse();
  ExprPtr parse_standalone() {
    skip_newlines();
    ExprPtr e = parse_expr();
    skip_newlines();
    if (peek().type != Tok::End) fail("unexpected '" + peek().text + "' after expression");
    return e;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at_op(const char* op) const { return peek().type == Tok::Op && peek().text == op; }
  bool at_name(const char* name) const { return peek().type == Tok::Name && peek().text == name; }
  [[noreturn]] void fail(const std::string& message) const { throw ParseError(peek().loc, message); }
  Token expect_op(const char* op);
  Token expect_name();
  void expect_newline();
  void skip_newlines() {
    while (peek().type == Tok::Newline) next();
  }

  RawBlock parse_def();
  std::vector<Stmt> parse_suite(RawBlock& block);
  void parse_statement(RawBlock& block, std::vector<Stmt>& out);
  Stmt parse_if(RawBlock& block);
  DistSpec parse_distribution(const Token& name_tok);
  Rational constant(const ExprPtr& e, const char* what);

  ExprPtr parse_expr() { return parse_or(); }
  ExprPtr parse_or();
  ExprPtr parse_and();
  ExprPtr parse_not();
  ExprPtr parse_comparison();
  ExprPtr parse_additive();
  ExprPtr parse_term();
  ExprPtr parse_unary();
  ExprPtr parse_primary();

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int sites_ = 0;
  std::vector<std::string> warnings_;
};

const std::set<std::string> kKeywords{"def", "if", "elif", "else", "and", "or", "not", "True", "False", "return", "pass"};
const std::set<std::string> kMarkers{"sensitiveAttribute", "qualified", "fairnessTarget"};

Token Parser::expect_op(const char* op) {
  if (!at_op(op)) fail(std::string("expected '") + op + "'");
  return next();
}

Token Parser::expect_name() {
  if (peek().type != Tok::Name || kKeywords.count(peek().text)) fail("expected a name");
  return next();
}

void Parser::expect_newline() {
  if (peek().type == Tok::End || peek().type == Tok::Dedent) return;
  if (peek().type != Tok::Newline) fail("expected end of statement");
  skip_newlines();
}

SourceFile Parser::parse() {
  std::vector<RawBlock> blocks;
  RawBlock implicit;
  implicit.name = "popModel";
  skip_newlines();
  while (peek().type != Tok::End) {
    if (at_name("def")) {
      blocks.push_back(parse_def());
    } else if (peek().type == Tok::Indent) {
      fail("unexpected indentation");
    } else {
      implicit.loc = implicit.body.empty() ? peek().loc : implicit.loc;
      parse_statement(implicit, implicit.body);
    }
    skip_newlines();
  }

  SourceFile file;
  std::optional<RawBlock> pop;
  std::optional<RawBlock> dec;
  if (!implicit.body.empty() || implicit.markers.sensitive || implicit.markers.qualified || implicit.markers.target) {
    pop = std::move(implicit);
  }
  for (auto& b : blocks) {
    if (b.name == "popModel") {
      if (pop) throw ParseError(b.loc, "more than one population model");
      pop = std::move(b);
    } else {
      if (dec) throw ParseError(b.loc, "more than one decision program");
      dec = std::move(b);
    }
  }
  if (!pop) throw ParseError(toks_.front().loc, "no popModel block");

  auto to_program = [](RawBlock&& b) {
    Program p;
    p.name = b.name;
    p.body = std::move(b.body);
    p.inputs = b.params;
    p.declared_inputs = b.has_params;
    p.markers = b.markers;
    if (b.returns) {
      p.outputs = *b.returns;
      p.explicit_outputs = true;
    }
    return p;
  };
  file.pop = to_program(std::move(*pop));
  if (file.pop.declared_inputs && !file.pop.inputs.empty()) {
    throw ParseError(toks_.front().loc, "the population model takes no parameters");
  }
  if (dec) file.dec = to_program(std::move(*dec));
  file.site_count = sites_;
  file.warnings = warnings_;
  return file;
}

RawBlock Parser::parse_def() {
  RawBlock b;
  b.loc = next().loc;
  b.name = expect_name().text;
  expect_op("(");
  if (!at_op(")")) {
    b.has_params = true;
    b.params.push_back(expect_name().text);
    while (at_op(",")) {
      next();
      b.params.push_back(expect_name().text);
    }
  }
  expect_op(")");
  expect_op(":");
  b.body = parse_suite(b);
  return b;
}

std::vector<Stmt> Parser::parse_suite(RawBlock& block) {
  std::vector<Stmt> body;
  if (peek().type != Tok::Newline) {
    parse_statement(block, body);
    return body;
  }
  skip_newlines();
  if (peek().type != Tok::Indent) fail("expected an indented block");
  next();
  while (peek().type != Tok::Dedent && peek().type != Tok::End) {
    parse_statement(block, body);
  }
  if (peek().type == Tok::Dedent) next();
  return body;
}

void Parser::parse_statement(RawBlock& block, std::vector<Stmt>& out) {
  const Token& t = peek();
  if (t.type != Tok::Name) fail("expected a statement");
  if (t.text == "if") {
    out.push_back(parse_if(block));
    return;
  }
  if (t.text == "pass") {
    next();
    expect_newline();
    return;
  }
  if (t.text == "return") {
    Token r = next();
    if (block.returns) throw ParseError(r.loc, "more than one return statement");
    std::vector<Var> names;
    if (peek().type != Tok::Newline && peek().type != Tok::End && peek().type != Tok::Dedent) {
      names.push_back(expect_name().text);
      while (at_op(",")) {
        next();
        names.push_back(expect_name().text);
      }
    }
    block.returns = names;
    expect_newline();
    return;
  }
  if (kMarkers.count(t.text)) {
    Token m = next();
    expect_op("(");
    ExprPtr e = parse_expr();
    expect_op(")");
    ExprPtr& slot = m.text == "sensitiveAttribute" ? block.markers.sensitive
                    : m.text == "qualified"        ? block.markers.qualified
                                                   : block.markers.target;
    if (slot) throw ParseError(m.loc, "marker " + m.text + " used twice");
    slot = e;
    expect_newline();
    return;
  }
  if (kKeywords.count(t.text)) fail("unexpected '" + t.text + "'");

  Token name = next();
  Stmt s;
  s.var = name.text;
  s.loc = name.loc;
  if (at_op("=")) {
    next();
    s.kind = Stmt::Kind::Assign;
    s.expr = parse_expr();
  } else if (at_op("~")) {
    next();
    s.kind = Stmt::Kind::ProbAssign;
    if (peek().type != Tok::Name) fail("expected a distribution");
    s.dist = parse_distribution(next());
    s.site = sites_++;
  } else {
    fail("expected '=' or '~' after '" + name.text + "'");
  }
  expect_newline();
  out.push_back(std::move(s));
}

Stmt Parser::parse_if(RawBlock& block) {
  Stmt s;
  s.kind = Stmt::Kind::Cond;
  s.loc = next().loc;
  s.expr = parse_expr();
  expect_op(":");
  s.then_body = parse_suite(block);
  if (at_name("elif")) {
    s.else_body.push_back(parse_if(block));
  } else if (at_name("else")) {
    next();
    expect_op(":");
    s.else_body = parse_suite(block);
  }
  return s;
}

Rational Parser::constant(const ExprPtr& e, const char* what) {
  switch (e->op) {
    case Expr::Op::Num: return e->num;
    case Expr::Op::Neg: return -constant(e->args[0], what);
    case Expr::Op::Add: return constant(e->args[0], what) + constant(e->args[1], what);
    case Expr::Op::Sub: return constant(e->args[0], what) - constant(e->args[1], what);
    case Expr::Op::Mul: return constant(e->args[0], what) * constant(e->args[1], what);
    case Expr::Op::Div: {
      Rational d = constant(e->args[1], what);
      if (d == 0) throw ParseError(e->loc, "division by zero");
      return constant(e->args[0], what) / d;
    }
    case Expr::Op::Var: throw ParseError(e->loc, std::string(what) + " must be constants, found variable '" + e->name + "'");
    default: throw ParseError(e->loc, std::string(what) + " must be numeric constants");
  }
}

DistSpec Parser::parse_distribution(const Token& name_tok) {
  const std::string& name = name_tok.text;
  std::size_t start = pos_;
  expect_op("(");
  DistSpec spec;
  if (name == "gaussian" || name == "gauss" || name == "normal") {
    std::vector<ExprPtr> args;
    if (!at_op(")")) {
      args.push_back(parse_expr());
      while (at_op(",")) {
        next();
        args.push_back(parse_expr());
      }
    }
    if (args.size() != 2) throw ParseError(name_tok.loc, name + " expects 2 parameters, got " + std::to_string(args.size()));
    Rational mu = constant(args[0], "distribution parameters");
    Rational second = constant(args[1], "distribution parameters");
    if (second <= 0) throw ParseError(args[1]->loc, name + " needs a positive spread parameter");
    // gaussian(μ, variance); gauss/normal(μ, standard deviation)
    double sd = name == "gaussian" ? std::sqrt(to_double(second)) : to_double(second);
    spec.dist = dist::Gaussian{to_double(mu), sd};
  } else if (name == "step") {
    expect_op("[");
    std::vector<dist::Segment> segs;
    while (!at_op("]")) {
      SourceLoc tloc = peek().loc;
      expect_op("(");
      Rational lo = constant(parse_expr(), "step bounds");
      expect_op(",");
      Rational hi = constant(parse_expr(), "step bounds");
      expect_op(",");
      Rational w = constant(parse_expr(), "step weights");
      expect_op(")");
      if (!(lo < hi)) throw ParseError(tloc, "step segment needs lower < upper");
      if (w <= 0) throw ParseError(tloc, "step segment needs a positive weight");
      segs.push_back({lo, hi, w});
      if (!at_op(",")) break;
      next();
    }
    expect_op("]");
    bool rescaled = false;
    try {
      spec.dist = dist::make_step(std::move(segs), true, &rescaled);
    } catch (const std::invalid_argument& e) {
      throw ParseError(name_tok.loc, e.what());
    }
    if (rescaled) {
      warnings_.push_back(format_error(name_tok.loc, "step weights do not integrate to 1; normalized"));
    }
  } else {
    throw ParseError(name_tok.loc, "unknown distribution '" + name + "'");
  }
  expect_op(")");
  std::string text = name;
  for (std::size_t i = start; i < pos_; ++i) text += toks_[i].text;
  spec.text = text;
  return spec;
}

ExprPtr Parser::parse_or() {
  ExprPtr lhs = parse_and();
  while (at_name("or")) {
    SourceLoc loc = next().loc;
    lhs = make_op(Expr::Op::Or, {lhs, parse_and()}, loc);
  }
  return lhs;
}

ExprPtr Parser::parse_and() {
  ExprPtr lhs = parse_not();
  while (at_name("and")) {
    SourceLoc loc = next().loc;
    lhs = make_op(Expr::Op::And, {lhs, parse_not()}, loc);
  }
  return lhs;
}

ExprPtr Parser::parse_not() {
  if (at_name("not") || at_op("!")) {
    SourceLoc loc = next().loc;
    return make_op(Expr::Op::Not, {parse_not()}, loc);
  }
  return parse_comparison();
}

ExprPtr Parser::parse_comparison() {
  ExprPtr lhs = parse_additive();
  static const std::map<std::string, Expr::Op> ops{{"<", Expr::Op::Lt},  {"<=", Expr::Op::Le}, {">", Expr::Op::Gt},
                                                   {">=", Expr::Op::Ge}, {"==", Expr::Op::Eq}, {"!=", Expr::Op::Ne}};
  if (peek().type == Tok::Op) {
    auto it = ops.find(peek().text);
    if (it != ops.end()) {
      SourceLoc loc = next().loc;
      ExprPtr rhs = parse_additive();
      if (peek().type == Tok::Op && ops.count(peek().text)) fail("chained comparisons are not supported");
      return make_op(it->second, {lhs, rhs}, loc);
    }
  }
  return lhs;
}

ExprPtr Parser::parse_additive() {
  ExprPtr lhs = parse_term();
  while (at_op("+") || at_op("-")) {
    Token op = next();
    lhs = make_op(op.text == "+" ? Expr::Op::Add : Expr::Op::Sub, {lhs, parse_term()}, op.loc);
  }
  return lhs;
}

ExprPtr Parser::parse_term() {
  ExprPtr lhs = parse_unary();
  while (at_op("*") || at_op("/")) {
    Token op = next();
    lhs = make_op(op.text == "*" ? Expr::Op::Mul : Expr::Op::Div, {lhs, parse_unary()}, op.loc);
  }
  return lhs;
}

ExprPtr Parser::parse_unary() {
  if (at_op("-")) {
    SourceLoc loc = next().loc;
    ExprPtr inner = parse_unary();
    if (inner->op == Expr::Op::Num) return make_num(-inner->num, loc);
    return make_op(Expr::Op::Neg, {inner}, loc);
  }
  if (at_op("+")) {
    next();
    return parse_unary();
  }
  return parse_primary();
}

ExprPtr Parser::parse_primary() {
  const Token& t = peek();
  if (t.type == Tok::Number) {
    Token n = next();
    try {
      return make_num(parse_rational(n.text), n.loc);
    } catch (const std::exception&) {
      throw ParseError(n.loc, "malformed number '" + n.text + "'");
    }
  }
  if (at_op("(")) {
    next();
    ExprPtr e = parse_expr();
    expect_op(")");
    return e;
  }
  if (t.type == Tok::Name) {
    if (t.text == "True" || t.text == "False") {
      Token b = next();
      return make_bool(b.text == "True", b.loc);
    }
    if (kKeywords.count(t.text)) fail("unexpected '" + t.text + "'");
    Token n = next();
    if (at_op("(")) throw ParseError(n.loc, "unknown function '" + n.text + "'");
    return make_var(n.text, n.loc);
  }
  fail("expected an expression");
}

// ---------------------------------------------------------------------------
// Well-formedness: definite assignment and Boolean/real typing.

class Checker {
 public:
  Checker(Program& p, const std::set<Var>* upstream) : p_(p), upstream_(upstream) {}

  void run() {
    std::set<Var> assigned(p_.inputs.begin(), p_.inputs.end());
    for (const auto& in : p_.inputs) {
      p_.all_vars.insert(in);
      if (upstream_bools_ && upstream_bools_->count(in)) p_.bool_vars.insert(in);
    }
    walk(p_.body, assigned);
    for (ExprPtr* m : {&p_.markers.sensitive, &p_.markers.qualified, &p_.markers.target}) {
      if (!*m) continue;
      read(**m, assigned);
      if (!is_bool(**m, p_.bool_vars)) throw ParseError((*m)->loc, "marker condition must be Boolean");
    }
    if (p_.explicit_outputs) {
      for (const auto& o : p_.outputs) {
        if (!assigned.count(o)) throw ParseError({}, "returned variable '" + o + "' is not assigned on every path");
      }
    } else {
      for (const auto& v : order_) {
        if (assigned.count(v)) p_.outputs.push_back(v);
      }
    }
    for (const auto& v : p_.all_vars) {
      if (!p_.prob_vars.count(v)) p_.det_vars.insert(v);
    }
  }

  std::set<Var> definitely_assigned;
  const std::set<Var>* upstream_bools_ = nullptr;

 private:
  void read(const Expr& e, std::set<Var>& assigned) {
    std::set<Var> used;
    collect_vars(e, used);
    for (const auto& v : used) {
      if (assigned.count(v)) continue;
      if (upstream_ && upstream_->count(v)) {
        // Decision program reading a population variable: becomes an input.
        p_.inputs.push_back(v);
        p_.all_vars.insert(v);
        if (upstream_bools_ && upstream_bools_->count(v)) p_.bool_vars.insert(v);
        assigned.insert(v);
        continue;
      }
      throw ParseError(find_loc(e, v), "read before assignment of '" + v + "'");
    }
    check_types(e);
  }

  SourceLoc find_loc(const Expr& e, const Var& v) {
    if (e.op == Expr::Op::Var && e.name == v) return e.loc;
    for (const auto& a : e.args) {
      SourceLoc l = find_loc(*a, v);
      if (l.line) return l;
    }
    return {};
  }

  void check_types(const Expr& e) {
    for (const auto& a : e.args) check_types(*a);
    bool arith = e.op == Expr::Op::Neg || (e.op >= Expr::Op::Add && e.op <= Expr::Op::Div) || e.is_comparison();
    if (arith) {
      for (const auto& a : e.args) {
        if (is_bool(*a, p_.bool_vars)) throw ParseError(a->loc, "Boolean value used in arithmetic");
      }
    }
    if (e.is_logical()) {
      for (const auto& a : e.args) {
        if (!is_bool(*a, p_.bool_vars)) throw ParseError(a->loc, "expected a Boolean condition");
      }
    }
  }

  void define(const Var& v, bool boolean, SourceLoc loc) {
    if (p_.all_vars.count(v) && p_.bool_vars.count(v) != boolean) {
      throw ParseError(loc, "variable '" + v + "' assigned both Boolean and real values");
    }
    if (!p_.all_vars.count(v)) order_.push_back(v);
    p_.all_vars.insert(v);
    if (boolean) p_.bool_vars.insert(v);
  }

  void walk(const std::vector<Stmt>& body, std::set<Var>& assigned) {
    for (const auto& s : body) {
      switch (s.kind) {
        case Stmt::Kind::Assign:
          read(*s.expr, assigned);
          define(s.var, is_bool(*s.expr, p_.bool_vars), s.loc);
          assigned.insert(s.var);
          break;
        case Stmt::Kind::ProbAssign:
          define(s.var, false, s.loc);
          p_.prob_vars.insert(s.var);
          assigned.insert(s.var);
          break;
        case Stmt::Kind::Cond: {
          read(*s.expr, assigned);
          if (!is_bool(*s.expr, p_.bool_vars)) throw ParseError(s.expr->loc, "condition must be Boolean");
          std::set<Var> a = assigned;
          std::set<Var> b = assigned;
          walk(s.then_body, a);
          walk(s.else_body, b);
          std::set<Var> both;
          std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(both, both.begin()));
          // Inputs discovered inside a branch are inputs everywhere.
          for (const auto& in : p_.inputs) both.insert(in);
          assigned = std::move(both);
          break;
        }
      }
    }
    definitely_assigned = assigned;
  }

  Program& p_;
  const std::set<Var>* upstream_;
  std::vector<Var> order_;
};

}  // namespace

SourceFile parse_program(const std::string& text) {
  Parser parser(detail::tokenize(text));
  SourceFile f = parser.parse();

  Checker pop_check(f.pop, nullptr);
  pop_check.run();
  for (const auto& v : f.pop.all_vars) f.pop.final_names[v] = v;

  if (f.dec) {
    std::set<Var> available = f.pop.explicit_outputs ? std::set<Var>(f.pop.outputs.begin(), f.pop.outputs.end())
                                                     : pop_check.definitely_assigned;
    Checker dec_check(*f.dec, f.dec->declared_inputs ? nullptr : &available);
    dec_check.upstream_bools_ = &f.pop.bool_vars;
    dec_check.run();
    for (const auto& v : f.dec->all_vars) f.dec->final_names[v] = v;
  }
  return f;
}

ExprPtr parse_expression(const std::string& text) {
  Parser parser(detail::tokenize(text));
  return parser.parse_standalone();
}

SourceFile parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_program(text.str());
}

}  // namespace volfair::lang
