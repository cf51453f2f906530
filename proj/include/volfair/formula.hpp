#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "volfair/rational.hpp"

namespace volfair::logic {

using Var = std::string;

/// Rational-coefficient affine combination of real variables.
class LinearTerm {
 public:
  LinearTerm() = default;
  explicit LinearTerm(Rational constant) : constant_(std::move(constant)) {}

  static LinearTerm var(const Var& name, const Rational& coeff = 1);

  const std::map<Var, Rational>& coeffs() const { return coeffs_; }
  const Rational& constant() const { return constant_; }
  Rational coeff(const Var& name) const;
  bool is_constant() const { return coeffs_.empty(); }
  bool mentions(const Var& name) const { return coeffs_.count(name) != 0; }

  LinearTerm operator+(const LinearTerm& other) const;
  LinearTerm operator-(const LinearTerm& other) const;
  LinearTerm operator-() const;
  LinearTerm operator*(const Rational& factor) const;

  LinearTerm substitute(const Var& name, const LinearTerm& replacement) const;
  LinearTerm rename(const std::map<Var, Var>& renaming) const;

  /// Evaluates with a lookup that must return a value for every variable.
  Rational evaluate(const std::function<Rational(const Var&)>& lookup) const;

  bool operator==(const LinearTerm& other) const {
    return constant_ == other.constant_ && coeffs_ == other.coeffs_;
  }
  bool operator<(const LinearTerm& other) const;

 private:
  void add_coeff(const Var& name, const Rational& value);

  std::map<Var, Rational> coeffs_;
  Rational constant_ = 0;
};

enum class Rel { Lt, Le, Eq };

/// `term rel 0`. Normalized so that syntactically equal constraints compare equal.
struct Atom {
  LinearTerm term;
  Rel rel = Rel::Le;

  static Atom make(LinearTerm term, Rel rel);

  /// For ground atoms: the truth value. nullopt when the atom has variables.
  std::optional<bool> ground_value() const;
  bool holds(const std::function<Rational(const Var&)>& lookup) const;

  bool operator==(const Atom& other) const { return rel == other.rel && term == other.term; }
  bool operator<(const Atom& other) const;
};

/// Negation of an atom as a disjunction of atoms (Eq negates to two strict atoms).
std::vector<Atom> negate_atom(const Atom& atom);

enum class Kind { True, False, Atom, Not, And, Or, Exists, Forall };

class Formula;

struct Node {
  Kind kind = Kind::True;
  Atom atom;
  std::vector<Formula> children;
  std::vector<Var> bound;
};

/// Immutable, shareable formula handle.
class Formula {
 public:
  Formula();  // true

  Kind kind() const { return node_->kind; }
  const Atom& atom() const { return node_->atom; }
  const std::vector<Formula>& children() const { return node_->children; }
  const std::vector<Var>& bound() const { return node_->bound; }

  bool is_true() const { return kind() == Kind::True; }
  bool is_false() const { return kind() == Kind::False; }

  static Formula make(Node node);

 private:
  std::shared_ptr<const Node> node_;
};

Formula mk_true();
Formula mk_false();
Formula mk_bool(bool value);
Formula mk_atom(const Atom& atom);
Formula mk_not(const Formula& f);
Formula mk_and(std::vector<Formula> parts);
Formula mk_or(std::vector<Formula> parts);
Formula mk_and(const Formula& a, const Formula& b);
Formula mk_or(const Formula& a, const Formula& b);
Formula mk_implies(const Formula& a, const Formula& b);
Formula mk_iff(const Formula& a, const Formula& b);
/// (c ∧ a) ∨ (¬c ∧ b)
Formula mk_ite(const Formula& c, const Formula& a, const Formula& b);
Formula mk_exists(std::vector<Var> vars, const Formula& body);
Formula mk_forall(std::vector<Var> vars, const Formula& body);

// Comparison builders: lhs ⋈ rhs.
Formula lt(const LinearTerm& lhs, const LinearTerm& rhs);
Formula le(const LinearTerm& lhs, const LinearTerm& rhs);
Formula eq(const LinearTerm& lhs, const LinearTerm& rhs);
Formula gt(const LinearTerm& lhs, const LinearTerm& rhs);
Formula ge(const LinearTerm& lhs, const LinearTerm& rhs);
Formula ne(const LinearTerm& lhs, const LinearTerm& rhs);

std::set<Var> free_vars(const Formula& f);
bool is_quantifier_free(const Formula& f);

/// Negation normal form. Negations are absorbed into atoms; quantifiers are dualized.
Formula nnf(const Formula& f);

/// Capture-avoiding substitution of free occurrences.
Formula substitute(const Formula& f, const std::map<Var, LinearTerm>& subst);
Formula rename(const Formula& f, const std::map<Var, Var>& renaming);

/// Truth value of a quantifier-free formula.
bool evaluate(const Formula& f, const std::function<Rational(const Var&)>& lookup);

using Conjunction = std::vector<Atom>;

class DnfOverflow : public std::runtime_error {
 public:
  explicit DnfOverflow(std::size_t cap)
      : std::runtime_error("DNF exceeds " + std::to_string(cap) + " disjuncts"), cap_(cap) {}
  std::size_t cap() const { return cap_; }

 private:
  std::size_t cap_;
};

/// Disjunctive normal form of a quantifier-free formula. Ground atoms are
/// folded, duplicate atoms removed. Throws DnfOverflow past `cap` disjuncts.
std::vector<Conjunction> to_dnf(const Formula& f, std::size_t cap);

Formula from_conjunction(const Conjunction& conj);
Formula from_dnf(const std::vector<Conjunction>& dnf);

/// Infix rendering for diagnostics.
std::string to_string(const Formula& f);
std::string to_string(const LinearTerm& t);

/// SMT-LIB 2 term for a formula (Real sort only).
std::string to_smtlib(const Formula& f);
std::string to_smtlib(const LinearTerm& t);
/// Symbol quoting for SMT-LIB.
std::string smt_symbol(const Var& name);

/// Fresh name based on `base` that is not in `taken`.
Var fresh_name(const Var& base, const std::set<Var>& taken);

}  // namespace volfair::logic
