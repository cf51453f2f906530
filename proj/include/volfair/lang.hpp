#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "volfair/dist.hpp"
#include "volfair/formula.hpp"
#include "volfair/rational.hpp"

namespace volfair::lang {

using logic::Var;

struct SourceLoc {
  int line = 0;
  int column = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceLoc loc, const std::string& message);
  SourceLoc loc() const { return loc_; }
  const std::string& detail() const { return detail_; }

 private:
  SourceLoc loc_;
  std::string detail_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op { Num, Var, Bool, Neg, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or, Not };
  Op op = Op::Num;
  Rational num;
  bool truth = false;
  Var name;
  std::vector<ExprPtr> args;
  SourceLoc loc;

  bool is_comparison() const { return op >= Op::Lt && op <= Op::Ne; }
  bool is_logical() const { return op == Op::And || op == Op::Or || op == Op::Not; }
};

ExprPtr make_num(Rational v, SourceLoc loc = {});
ExprPtr make_var(const Var& v, SourceLoc loc = {});
ExprPtr make_bool(bool v, SourceLoc loc = {});
ExprPtr make_op(Expr::Op op, std::vector<ExprPtr> args, SourceLoc loc = {});

/// Boolean-valued under the given set of Boolean variables.
bool is_bool(const Expr& e, const std::set<Var>& bool_vars);
void collect_vars(const Expr& e, std::set<Var>& out);
ExprPtr rename(const ExprPtr& e, const std::map<Var, Var>& renaming);
std::string to_string(const Expr& e);

struct DistSpec {
  dist::Distribution dist;
  std::string text;
};

struct Stmt {
  enum class Kind { Assign, ProbAssign, Cond };
  Kind kind = Kind::Assign;
  Var var;
  ExprPtr expr;  // Assign: right-hand side; Cond: guard
  std::optional<DistSpec> dist;
  int site = -1;  // ProbAssign: index into the ω queues
  std::vector<Stmt> then_body;
  std::vector<Stmt> else_body;
  SourceLoc loc;
};

struct Markers {
  ExprPtr sensitive;
  ExprPtr qualified;
  ExprPtr target;
};

struct Program {
  std::string name;
  std::vector<Stmt> body;
  std::vector<Var> inputs;
  std::vector<Var> outputs;
  std::set<Var> all_vars;
  std::set<Var> prob_vars;
  std::set<Var> det_vars;
  std::set<Var> bool_vars;
  Markers markers;
  /// Source name → name holding its final value (identity before SSA).
  std::map<Var, Var> final_names;
  bool ssa = false;
  /// Outputs were listed in a return statement (linked by position).
  bool explicit_outputs = false;
  /// Inputs were listed as parameters (otherwise discovered from reads).
  bool declared_inputs = false;
  std::vector<std::string> warnings;
};

/// A population model and an optional decision program.
struct SourceFile {
  Program pop;
  std::optional<Program> dec;
  int site_count = 0;
  std::vector<std::string> warnings;
};

SourceFile parse_program(const std::string& text);
SourceFile parse_file(const std::string& path);
/// A single expression, e.g. an event condition given on the command line.
ExprPtr parse_expression(const std::string& text);

/// Static single assignment: first assignment keeps the source name, later
/// ones become x_1, x_2, ...; branch merges reuse a branch version where
/// possible and add identity assignments on the other branch.
Program to_ssa(const Program& p);

using State = std::map<Var, double>;

class OmegaUnderflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pre-drawn values, one queue per probabilistic assignment site.
struct OmegaSequences {
  std::vector<std::deque<double>> queues;
  std::uint64_t seed = 0;

  static OmegaSequences draw(const SourceFile& file, std::size_t per_site, std::uint64_t seed);
};

/// Runs the program. Unassigned variables read as 0; Booleans are stored as 1/0.
State interpret(const Program& p, OmegaSequences& omega, State initial = {});
/// Population model followed by the decision program with inputs linked.
State interpret(const SourceFile& f, OmegaSequences& omega);

double eval_real(const Expr& e, const State& s);
bool eval_bool(const Expr& e, const State& s);

/// Inputs of `dec` bound from the population model's final state.
State link_inputs(const SourceFile& f, const State& pop_state);

struct Estimate {
  double estimate = 0.0;
  double halfwidth95 = 0.0;
};

/// Fraction of n runs whose final state satisfies the predicate.
Estimate monte_carlo(const SourceFile& f, const std::function<bool(const State&)>& event, std::size_t n,
                     std::uint64_t seed);
/// Same for a linear-arithmetic event over final-state variable names.
Estimate monte_carlo(const SourceFile& f, const logic::Formula& event, std::size_t n, std::uint64_t seed);

/// Formula evaluator over doubles, prepared once for repeated use.
class CompiledFormula {
 public:
  explicit CompiledFormula(const logic::Formula& f);
  bool operator()(const State& s) const;

 private:
  struct Node {
    logic::Kind kind;
    std::vector<std::pair<Var, double>> coeffs;
    double constant = 0.0;
    logic::Rel rel = logic::Rel::Le;
    std::vector<int> children;
  };
  bool eval(int i, const State& s) const;
  int build(const logic::Formula& f);
  std::vector<Node> nodes_;
};

}  // namespace volfair::lang
