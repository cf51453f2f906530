#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "volfair/dist.hpp"
#include "volfair/formula.hpp"
#include "volfair/lang.hpp"

namespace volfair::pvc {

using logic::Formula;
using logic::Var;

/// Raised for arithmetic outside linear real arithmetic.
class NonlinearError : public lang::ParseError {
 public:
  using lang::ParseError::ParseError;
};

/// One top-level conjunct of φ_P together with the variables it assigns.
struct Constraint {
  Formula formula;
  std::set<Var> defines;
};

struct Pvc {
  std::vector<Constraint> constraints;
  dist::DensityMap densities;
  /// Probabilistic variables in program order.
  std::vector<Var> prob_order;
  std::set<Var> det_vars;
  /// Boolean program variables, inlined as formulas over real variables.
  std::map<Var, Formula> bool_defs;
  std::vector<Var> inputs;
  std::vector<Var> outputs;
  std::map<Var, Var> final_names;
  std::optional<Formula> sensitive;
  std::optional<Formula> qualified;
  std::optional<Formula> target;

  Formula phi() const;
  std::set<Var> vars() const;
};

/// φ_P and D for an SSA program (converted first if needed).
Pvc generate_pvc(const lang::Program& p);

/// Linear term / formula for an expression over the Pvc's variables.
logic::LinearTerm linearize(const lang::Expr& e);
Formula to_formula(const Pvc& pvc, const lang::Expr& e);

/// Renames variables that appear in `taken` by appending `^i`.
Pvc rename_apart(const Pvc& p, const std::set<Var>& taken);

/// pre ∧ dec ∧ ⋀ dec_inputs[i] = pre_outputs[i]. Variable sets must be disjoint.
Pvc compose(const Pvc& pre, const Pvc& dec, const std::vector<Var>& pre_outputs, const std::vector<Var>& dec_inputs);

/// Population model composed with the decision program, inputs linked by
/// position when both sides declare them, otherwise by name.
Pvc compose_file(const lang::SourceFile& f);

/// Rewrites a condition over source names to the final SSA names.
Formula final_state(const Pvc& pvc, const Formula& phi);

/// ∃V_d. φ_P ∧ φ
Formula event_formula(const Pvc& pvc, const Formula& phi);

/// The event ∃hidden. frame ∧ cond, restricted to the constraints the
/// condition depends on, and the probabilistic dimensions it ranges over.
struct Region {
  Formula frame;
  std::vector<Var> hidden;
  Formula cond;
  std::vector<Var> dims;

  Formula projected() const;
  Region negated() const;
};

Region event_region(const Pvc& pvc, const Formula& phi, bool slice = true);

/// SMT-LIB 2 rendering of φ_P with the densities listed as comments.
std::string dump_smtlib(const Pvc& pvc);

}  // namespace volfair::pvc
