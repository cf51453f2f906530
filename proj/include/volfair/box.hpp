#pragma once

#include <map>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

#include "volfair/formula.hpp"
#include "volfair/qe.hpp"

namespace volfair::logic {

/// Real number or ±∞.
struct ExtValue {
  enum class Kind { NegInf, Finite, PosInf };
  Kind kind = Kind::Finite;
  Rational value = 0;

  static ExtValue finite(Rational v) { return {Kind::Finite, std::move(v)}; }
  static ExtValue neg_inf() { return {Kind::NegInf, 0}; }
  static ExtValue pos_inf() { return {Kind::PosInf, 0}; }

  bool is_finite() const { return kind == Kind::Finite; }
  double to_double() const;
  std::string str() const;

  bool operator==(const ExtValue& o) const { return kind == o.kind && (kind != Kind::Finite || value == o.value); }
  bool operator<(const ExtValue& o) const;
  bool operator<=(const ExtValue& o) const { return *this < o || *this == o; }
  bool operator>(const ExtValue& o) const { return o < *this; }
};

inline std::ostream& operator<<(std::ostream& out, const ExtValue& v) { return out << v.str(); }

/// Closed interval with optionally infinite endpoints.
struct Interval {
  ExtValue lo = ExtValue::neg_inf();
  ExtValue hi = ExtValue::pos_inf();
};

/// Axis-aligned box over an ordered list of dimensions.
class Hyperrectangle {
 public:
  Hyperrectangle() = default;
  Hyperrectangle(std::vector<Var> dims, std::vector<Interval> bounds);

  /// ℝⁿ over the given dimensions.
  static Hyperrectangle unbounded(std::vector<Var> dims);

  const std::vector<Var>& dims() const { return dims_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  const Interval& bound(std::size_t i) const { return bounds_.at(i); }
  Interval& bound(std::size_t i) { return bounds_.at(i); }
  const Interval& bound(const Var& dim) const;
  std::size_t size() const { return dims_.size(); }

  bool is_degenerate() const;
  /// True when the two closed boxes share at least one point.
  bool intersects(const Hyperrectangle& other) const;
  bool contains(const Hyperrectangle& other) const;

  /// ⋀ lo ≤ x ≤ hi, dropping infinite endpoints.
  Formula to_formula() const;
  std::string str() const;

 private:
  std::vector<Var> dims_;
  std::vector<Interval> bounds_;
};

/// Fresh lower/upper endpoint variables for each dimension.
struct BoxVars {
  std::vector<Var> dims;
  std::map<Var, Var> lower;
  std::map<Var, Var> upper;

  static BoxVars make(const std::vector<Var>& dims, const std::set<Var>& taken);
  std::vector<Var> endpoint_vars() const;
  /// ⋀ l_x ≤ u_x
  Formula ordered() const;
  /// ⋀ l_x ≤ x ≤ u_x
  Formula contains_point() const;
};

/// Hyperrectangular decomposition □_φ.
struct Decomposition {
  BoxVars vars;
  /// (⋀ l_x ≤ u_x) ∧ ∀X. (⋀ l_x ≤ x ≤ u_x) ⇒ φ, with the quantifier kept.
  Formula quantified;
  /// Quantifier-free equivalent, absent when elimination exceeded the DNF cap.
  std::optional<Formula> eliminated;

  /// The formula to hand to a solver: eliminated when available.
  const Formula& psi() const { return eliminated ? *eliminated : quantified; }
};

/// □_φ for a quantifier-free φ over `dims`.
Decomposition decompose(const Formula& phi, const std::vector<Var>& dims, std::size_t dnf_cap = kDefaultDnfCap,
                        const std::set<Var>& taken = {});

/// □ of ∃hidden. (frame ∧ cond), where every assignment of the free variables
/// has exactly one extension to `hidden` satisfying `frame`. Under that
/// assumption ¬∃hidden.(frame ∧ cond) ≡ ∃hidden.(frame ∧ ¬cond), so the
/// universal quantifier is eliminated over a single DNF.
Decomposition decompose_projected(const Formula& frame, const std::vector<Var>& hidden, const Formula& cond,
                                  const std::vector<Var>& dims, std::size_t dnf_cap = kDefaultDnfCap,
                                  const std::set<Var>& taken = {});

/// ⋁_x u_x < lo(x) ∨ l_x > hi(x); disjuncts on infinite endpoints are dropped.
Formula block(const Hyperrectangle& box, const BoxVars& vars);

class SolverContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H^m: reads l_x, u_x from the model. Throws when m(l_x) > m(u_x).
Hyperrectangle induced_rectangle(const std::map<Var, Rational>& model, const BoxVars& vars);

/// Endpoint assignment matching a box: l_x ↦ lo(x), u_x ↦ hi(x).
std::map<Var, ExtValue> endpoint_assignment(const Hyperrectangle& box, const BoxVars& vars);

/// Replaces variables by finite values or by a common limit M → ∞ (for +∞) /
/// −M (for −∞). Each atom is replaced by its eventual truth value when the
/// coefficient of M is nonzero. Works under quantifiers.
Formula substitute_endpoints(const Formula& f, const std::map<Var, ExtValue>& values);

/// Union of disjoint intervals with open or closed ends.
class IntervalSet {
 public:
  struct Piece {
    ExtValue lo;
    bool lo_closed = false;
    ExtValue hi;
    bool hi_closed = false;
  };

  static IntervalSet empty() { return IntervalSet{}; }
  static IntervalSet all();
  static IntervalSet point(const Rational& v);
  /// {t : t < v} or {t : t ≤ v}
  static IntervalSet below(const Rational& v, bool closed);
  /// {t : t > v} or {t : t ≥ v}
  static IntervalSet above(const Rational& v, bool closed);

  IntervalSet unite(const IntervalSet& other) const;
  IntervalSet intersect(const IntervalSet& other) const;

  bool contains(const Rational& v) const;
  /// The maximal piece containing v.
  std::optional<Piece> component(const Rational& v) const;
  const std::vector<Piece>& pieces() const { return pieces_; }

 private:
  void normalize();
  std::vector<Piece> pieces_;
};

/// The set of values of `var` satisfying a quantifier-free formula in which
/// every other variable has already been substituted.
IntervalSet feasible_set(const Formula& f, const Var& var);

}  // namespace volfair::logic
