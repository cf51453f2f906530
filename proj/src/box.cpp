#include "volfair/box.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace volfair::logic {

// ---------------------------------------------------------------------------
// ExtValue

double ExtValue::to_double() const {
  switch (kind) {
    case Kind::NegInf: return -std::numeric_limits<double>::infinity();
    case Kind::PosInf: return std::numeric_limits<double>::infinity();
    case Kind::Finite: return value.get_d();
  }
  return 0.0;
}

std::string ExtValue::str() const {
  switch (kind) {
    case Kind::NegInf: return "-inf";
    case Kind::PosInf: return "inf";
    case Kind::Finite: return value.get_str();
  }
  return "?";
}

bool ExtValue::operator<(const ExtValue& o) const {
  if (kind != o.kind) return static_cast<int>(kind) < static_cast<int>(o.kind);
  return kind == Kind::Finite && value < o.value;
}

// ---------------------------------------------------------------------------
// Hyperrectangle

Hyperrectangle::Hyperrectangle(std::vector<Var> dims, std::vector<Interval> bounds)
    : dims_(std::move(dims)), bounds_(std::move(bounds)) {
  if (dims_.size() != bounds_.size()) throw std::invalid_argument("hyperrectangle: dims/bounds size mismatch");
  for (const auto& b : bounds_) {
    if (b.hi < b.lo) throw std::invalid_argument("hyperrectangle: lower endpoint exceeds upper endpoint");
  }
}

Hyperrectangle Hyperrectangle::unbounded(std::vector<Var> dims) {
  std::vector<Interval> bounds(dims.size());
  return Hyperrectangle(std::move(dims), std::move(bounds));
}

const Interval& Hyperrectangle::bound(const Var& dim) const {
  auto it = std::find(dims_.begin(), dims_.end(), dim);
  if (it == dims_.end()) throw std::out_of_range("hyperrectangle has no dimension " + dim);
  return bounds_[static_cast<std::size_t>(it - dims_.begin())];
}

bool Hyperrectangle::is_degenerate() const {
  return std::any_of(bounds_.begin(), bounds_.end(), [](const Interval& b) { return b.lo == b.hi; });
}

bool Hyperrectangle::intersects(const Hyperrectangle& other) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const Interval& a = bounds_[i];
    const Interval& b = other.bound(dims_[i]);
    if (a.hi < b.lo || b.hi < a.lo) return false;
  }
  return true;
}

bool Hyperrectangle::contains(const Hyperrectangle& other) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const Interval& a = bounds_[i];
    const Interval& b = other.bound(dims_[i]);
    if (b.lo < a.lo || a.hi < b.hi) return false;
  }
  return true;
}

Formula Hyperrectangle::to_formula() const {
  std::vector<Formula> parts;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    LinearTerm x = LinearTerm::var(dims_[i]);
    if (bounds_[i].lo.is_finite()) parts.push_back(le(LinearTerm(bounds_[i].lo.value), x));
    if (bounds_[i].hi.is_finite()) parts.push_back(le(x, LinearTerm(bounds_[i].hi.value)));
  }
  return mk_and(std::move(parts));
}

std::string Hyperrectangle::str() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) out << " x ";
    out << dims_[i] << "[" << bounds_[i].lo.str() << ", " << bounds_[i].hi.str() << "]";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// BoxVars

BoxVars BoxVars::make(const std::vector<Var>& dims, const std::set<Var>& taken) {
  BoxVars out;
  out.dims = dims;
  std::set<Var> used = taken;
  used.insert(dims.begin(), dims.end());
  for (const auto& d : dims) {
    Var l = fresh_name("__l_" + d, used);
    used.insert(l);
    Var u = fresh_name("__u_" + d, used);
    used.insert(u);
    out.lower.emplace(d, l);
    out.upper.emplace(d, u);
  }
  return out;
}

std::vector<Var> BoxVars::endpoint_vars() const {
  std::vector<Var> out;
  for (const auto& d : dims) {
    out.push_back(lower.at(d));
    out.push_back(upper.at(d));
  }
  return out;
}

Formula BoxVars::ordered() const {
  std::vector<Formula> parts;
  for (const auto& d : dims) parts.push_back(le(LinearTerm::var(lower.at(d)), LinearTerm::var(upper.at(d))));
  return mk_and(std::move(parts));
}

Formula BoxVars::contains_point() const {
  std::vector<Formula> parts;
  for (const auto& d : dims) {
    parts.push_back(le(LinearTerm::var(lower.at(d)), LinearTerm::var(d)));
    parts.push_back(le(LinearTerm::var(d), LinearTerm::var(upper.at(d))));
  }
  return mk_and(std::move(parts));
}

// ---------------------------------------------------------------------------
// Decomposition

namespace {

// (⋀ l ≤ u) ∧ ¬∃(elim). (box ∧ body), given the DNF of body.
std::optional<Formula> eliminate_box(const std::vector<Conjunction>& body_dnf, const BoxVars& vars,
                                     const std::vector<Var>& elim) {
  Conjunction box_atoms;
  for (const auto& d : vars.dims) {
    box_atoms.push_back(Atom::make(LinearTerm::var(vars.lower.at(d)) - LinearTerm::var(d), Rel::Le));
    box_atoms.push_back(Atom::make(LinearTerm::var(d) - LinearTerm::var(vars.upper.at(d)), Rel::Le));
  }
  std::set<Atom> implied;
  for (const auto& d : vars.dims) {
    implied.insert(Atom::make(LinearTerm::var(vars.lower.at(d)) - LinearTerm::var(vars.upper.at(d)), Rel::Le));
  }

  std::vector<Formula> clauses{vars.ordered()};
  std::set<Conjunction> seen;
  for (const auto& d : body_dnf) {
    Conjunction conj = d;
    conj.insert(conj.end(), box_atoms.begin(), box_atoms.end());
    auto projected = fm_project(std::move(conj), elim);
    if (!projected) continue;
    Conjunction residual;
    for (auto& a : *projected) {
      if (!implied.count(a)) residual.push_back(std::move(a));
    }
    if (residual.empty()) return mk_false();
    if (!seen.insert(residual).second) continue;
    clauses.push_back(nnf(mk_not(from_conjunction(residual))));
  }
  return mk_and(std::move(clauses));
}

}  // namespace

Decomposition decompose(const Formula& phi, const std::vector<Var>& dims, std::size_t dnf_cap,
                        const std::set<Var>& taken) {
  std::set<Var> used = taken;
  auto fv = free_vars(phi);
  used.insert(fv.begin(), fv.end());
  Decomposition out;
  out.vars = BoxVars::make(dims, used);
  out.quantified = mk_and(out.vars.ordered(), mk_forall(dims, mk_implies(out.vars.contains_point(), phi)));
  try {
    out.eliminated = eliminate_box(to_dnf(mk_not(phi), dnf_cap), out.vars, dims);
  } catch (const DnfOverflow&) {
    out.eliminated.reset();
  }
  return out;
}

Decomposition decompose_projected(const Formula& frame, const std::vector<Var>& hidden, const Formula& cond,
                                  const std::vector<Var>& dims, std::size_t dnf_cap, const std::set<Var>& taken) {
  std::set<Var> used = taken;
  for (const auto& f : {frame, cond}) {
    auto fv = free_vars(f);
    used.insert(fv.begin(), fv.end());
  }
  used.insert(hidden.begin(), hidden.end());

  Decomposition out;
  out.vars = BoxVars::make(dims, used);
  std::vector<Var> all = dims;
  all.insert(all.end(), hidden.begin(), hidden.end());
  out.quantified = mk_and(out.vars.ordered(),
                          mk_forall(all, mk_implies(mk_and(out.vars.contains_point(), frame), cond)));
  try {
    out.eliminated = eliminate_box(to_dnf(mk_and(frame, mk_not(cond)), dnf_cap), out.vars, all);
  } catch (const DnfOverflow&) {
    out.eliminated.reset();
  }
  return out;
}

Formula block(const Hyperrectangle& box, const BoxVars& vars) {
  std::vector<Formula> parts;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Var& d = box.dims()[i];
    const Interval& b = box.bound(i);
    if (b.lo.is_finite()) parts.push_back(lt(LinearTerm::var(vars.upper.at(d)), LinearTerm(b.lo.value)));
    if (b.hi.is_finite()) parts.push_back(gt(LinearTerm::var(vars.lower.at(d)), LinearTerm(b.hi.value)));
  }
  return mk_or(std::move(parts));
}

Hyperrectangle induced_rectangle(const std::map<Var, Rational>& model, const BoxVars& vars) {
  std::vector<Interval> bounds;
  for (const auto& d : vars.dims) {
    auto lo = model.find(vars.lower.at(d));
    auto hi = model.find(vars.upper.at(d));
    if (lo == model.end() || hi == model.end()) {
      throw SolverContractViolation("model lacks an endpoint for dimension " + d);
    }
    if (lo->second > hi->second) {
      throw SolverContractViolation("model has lower endpoint above upper endpoint for " + d);
    }
    bounds.push_back(Interval{ExtValue::finite(lo->second), ExtValue::finite(hi->second)});
  }
  return Hyperrectangle(vars.dims, std::move(bounds));
}

std::map<Var, ExtValue> endpoint_assignment(const Hyperrectangle& box, const BoxVars& vars) {
  std::map<Var, ExtValue> out;
  for (std::size_t i = 0; i < box.size(); ++i) {
    out.emplace(vars.lower.at(box.dims()[i]), box.bound(i).lo);
    out.emplace(vars.upper.at(box.dims()[i]), box.bound(i).hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Endpoint substitution

namespace {

Formula substitute_atom(const Atom& atom, const std::map<Var, ExtValue>& values) {
  LinearTerm rest(atom.term.constant());
  Rational infinite_coeff = 0;
  for (const auto& [v, c] : atom.term.coeffs()) {
    auto it = values.find(v);
    if (it == values.end()) {
      rest = rest + LinearTerm::var(v, c);
      continue;
    }
    switch (it->second.kind) {
      case ExtValue::Kind::Finite: rest = rest + LinearTerm(c * it->second.value); break;
      case ExtValue::Kind::PosInf: infinite_coeff += c; break;
      case ExtValue::Kind::NegInf: infinite_coeff -= c; break;
    }
  }
  if (infinite_coeff != 0) {
    // term → ±∞
    if (atom.rel == Rel::Eq) return mk_false();
    return mk_bool(sgn(infinite_coeff) < 0);
  }
  return mk_atom(Atom{rest, atom.rel});
}

}  // namespace

Formula substitute_endpoints(const Formula& f, const std::map<Var, ExtValue>& values) {
  switch (f.kind()) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: return substitute_atom(f.atom(), values);
    case Kind::Not: return mk_not(substitute_endpoints(f.children().front(), values));
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> parts;
      parts.reserve(f.children().size());
      for (const auto& c : f.children()) parts.push_back(substitute_endpoints(c, values));
      return f.kind() == Kind::And ? mk_and(std::move(parts)) : mk_or(std::move(parts));
    }
    case Kind::Exists:
    case Kind::Forall: {
      std::map<Var, ExtValue> inner = values;
      for (const auto& b : f.bound()) inner.erase(b);
      Formula body = substitute_endpoints(f.children().front(), inner);
      return f.kind() == Kind::Exists ? mk_exists(f.bound(), body) : mk_forall(f.bound(), body);
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// IntervalSet

IntervalSet IntervalSet::all() {
  IntervalSet s;
  s.pieces_.push_back(Piece{ExtValue::neg_inf(), false, ExtValue::pos_inf(), false});
  return s;
}

IntervalSet IntervalSet::point(const Rational& v) {
  IntervalSet s;
  s.pieces_.push_back(Piece{ExtValue::finite(v), true, ExtValue::finite(v), true});
  return s;
}

IntervalSet IntervalSet::below(const Rational& v, bool closed) {
  IntervalSet s;
  s.pieces_.push_back(Piece{ExtValue::neg_inf(), false, ExtValue::finite(v), closed});
  return s;
}

IntervalSet IntervalSet::above(const Rational& v, bool closed) {
  IntervalSet s;
  s.pieces_.push_back(Piece{ExtValue::finite(v), closed, ExtValue::pos_inf(), false});
  return s;
}

namespace {

bool piece_nonempty(const IntervalSet::Piece& p) {
  if (p.lo < p.hi) return true;
  return p.lo == p.hi && p.lo.is_finite() && p.lo_closed && p.hi_closed;
}

// Lower endpoint order: a starts before b.
bool starts_before(const IntervalSet::Piece& a, const IntervalSet::Piece& b) {
  if (a.lo == b.lo) return a.lo_closed && !b.lo_closed;
  return a.lo < b.lo;
}

}  // namespace

void IntervalSet::normalize() {
  std::vector<Piece> in;
  for (auto& p : pieces_) {
    if (piece_nonempty(p)) in.push_back(p);
  }
  std::sort(in.begin(), in.end(), starts_before);
  std::vector<Piece> out;
  for (auto& p : in) {
    if (!out.empty()) {
      Piece& last = out.back();
      bool touches = p.lo < last.hi || (p.lo == last.hi && (p.lo_closed || last.hi_closed));
      if (touches) {
        if (last.hi < p.hi) {
          last.hi = p.hi;
          last.hi_closed = p.hi_closed;
        } else if (last.hi == p.hi) {
          last.hi_closed = last.hi_closed || p.hi_closed;
        }
        continue;
      }
    }
    out.push_back(p);
  }
  pieces_ = std::move(out);
}

IntervalSet IntervalSet::unite(const IntervalSet& other) const {
  IntervalSet s;
  s.pieces_ = pieces_;
  s.pieces_.insert(s.pieces_.end(), other.pieces_.begin(), other.pieces_.end());
  s.normalize();
  return s;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  IntervalSet s;
  for (const auto& a : pieces_) {
    for (const auto& b : other.pieces_) {
      Piece p;
      if (a.lo == b.lo) {
        p.lo = a.lo;
        p.lo_closed = a.lo_closed && b.lo_closed;
      } else if (a.lo < b.lo) {
        p.lo = b.lo;
        p.lo_closed = b.lo_closed;
      } else {
        p.lo = a.lo;
        p.lo_closed = a.lo_closed;
      }
      if (a.hi == b.hi) {
        p.hi = a.hi;
        p.hi_closed = a.hi_closed && b.hi_closed;
      } else if (a.hi < b.hi) {
        p.hi = a.hi;
        p.hi_closed = a.hi_closed;
      } else {
        p.hi = b.hi;
        p.hi_closed = b.hi_closed;
      }
      if (piece_nonempty(p)) s.pieces_.push_back(p);
    }
  }
  s.normalize();
  return s;
}

std::optional<IntervalSet::Piece> IntervalSet::component(const Rational& v) const {
  ExtValue x = ExtValue::finite(v);
  for (const auto& p : pieces_) {
    bool above_lo = p.lo < x || (p.lo == x && p.lo_closed);
    bool below_hi = x < p.hi || (p.hi == x && p.hi_closed);
    if (above_lo && below_hi) return p;
  }
  return std::nullopt;
}

bool IntervalSet::contains(const Rational& v) const { return component(v).has_value(); }

IntervalSet feasible_set(const Formula& f, const Var& var) {
  switch (f.kind()) {
    case Kind::True: return IntervalSet::all();
    case Kind::False: return IntervalSet::empty();
    case Kind::Atom: {
      const Atom& a = f.atom();
      if (a.term.coeffs().size() != 1 || !a.term.mentions(var)) {
        throw std::logic_error("feasible_set: atom has variables other than " + var);
      }
      Rational c = a.term.coeff(var);
      Rational root = -a.term.constant() / c;
      switch (a.rel) {
        case Rel::Eq: return IntervalSet::point(root);
        case Rel::Lt: return sgn(c) > 0 ? IntervalSet::below(root, false) : IntervalSet::above(root, false);
        case Rel::Le: return sgn(c) > 0 ? IntervalSet::below(root, true) : IntervalSet::above(root, true);
      }
      return IntervalSet::empty();
    }
    case Kind::Not: {
      Formula pushed = nnf(f);
      return feasible_set(pushed, var);
    }
    case Kind::And: {
      IntervalSet acc = IntervalSet::all();
      for (const auto& c : f.children()) {
        acc = acc.intersect(feasible_set(c, var));
        if (acc.pieces().empty()) break;
      }
      return acc;
    }
    case Kind::Or: {
      IntervalSet acc = IntervalSet::empty();
      for (const auto& c : f.children()) acc = acc.unite(feasible_set(c, var));
      return acc;
    }
    case Kind::Exists:
    case Kind::Forall: throw std::logic_error("feasible_set: formula has quantifiers");
  }
  return IntervalSet::empty();
}

}  // namespace volfair::logic
