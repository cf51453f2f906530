#include "volfair/formula.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace volfair::logic {

// ---------------------------------------------------------------------------
// LinearTerm

LinearTerm LinearTerm::var(const Var& name, const Rational& coeff) {
  LinearTerm t;
  t.add_coeff(name, coeff);
  return t;
}

Rational LinearTerm::coeff(const Var& name) const {
  auto it = coeffs_.find(name);
  return it == coeffs_.end() ? Rational(0) : it->second;
}

void LinearTerm::add_coeff(const Var& name, const Rational& value) {
  if (value == 0) return;
  auto [it, inserted] = coeffs_.emplace(name, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0) coeffs_.erase(it);
  }
}

LinearTerm LinearTerm::operator+(const LinearTerm& other) const {
  LinearTerm out = *this;
  for (const auto& [v, c] : other.coeffs_) out.add_coeff(v, c);
  out.constant_ += other.constant_;
  return out;
}

LinearTerm LinearTerm::operator-(const LinearTerm& other) const { return *this + (-other); }

LinearTerm LinearTerm::operator-() const { return *this * Rational(-1); }

LinearTerm LinearTerm::operator*(const Rational& factor) const {
  LinearTerm out;
  if (factor == 0) return out;
  for (const auto& [v, c] : coeffs_) out.coeffs_.emplace(v, c * factor);
  out.constant_ = constant_ * factor;
  return out;
}

LinearTerm LinearTerm::substitute(const Var& name, const LinearTerm& replacement) const {
  auto it = coeffs_.find(name);
  if (it == coeffs_.end()) return *this;
  Rational c = it->second;
  LinearTerm out = *this;
  out.coeffs_.erase(name);
  return out + replacement * c;
}

LinearTerm LinearTerm::rename(const std::map<Var, Var>& renaming) const {
  LinearTerm out(constant_);
  for (const auto& [v, c] : coeffs_) {
    auto it = renaming.find(v);
    out.add_coeff(it == renaming.end() ? v : it->second, c);
  }
  return out;
}

Rational LinearTerm::evaluate(const std::function<Rational(const Var&)>& lookup) const {
  Rational sum = constant_;
  for (const auto& [v, c] : coeffs_) sum += c * lookup(v);
  return sum;
}

bool LinearTerm::operator<(const LinearTerm& other) const {
  if (coeffs_ != other.coeffs_) return coeffs_ < other.coeffs_;
  return constant_ < other.constant_;
}

// ---------------------------------------------------------------------------
// Atom

Atom Atom::make(LinearTerm term, Rel rel) {
  Rational scale;
  if (term.is_constant()) {
    int s = sgn(term.constant());
    return Atom{LinearTerm(Rational(s)), rel};
  }
  const Rational& lead = term.coeffs().begin()->second;
  scale = 1 / abs(lead);
  if (rel == Rel::Eq && sgn(lead) < 0) scale = -scale;
  return Atom{term * scale, rel};
}

std::optional<bool> Atom::ground_value() const {
  if (!term.is_constant()) return std::nullopt;
  int s = sgn(term.constant());
  switch (rel) {
    case Rel::Lt: return s < 0;
    case Rel::Le: return s <= 0;
    case Rel::Eq: return s == 0;
  }
  return std::nullopt;
}

bool Atom::holds(const std::function<Rational(const Var&)>& lookup) const {
  int s = sgn(term.evaluate(lookup));
  switch (rel) {
    case Rel::Lt: return s < 0;
    case Rel::Le: return s <= 0;
    case Rel::Eq: return s == 0;
  }
  return false;
}

bool Atom::operator<(const Atom& other) const {
  if (rel != other.rel) return rel < other.rel;
  return term < other.term;
}

std::vector<Atom> negate_atom(const Atom& atom) {
  switch (atom.rel) {
    case Rel::Lt: return {Atom::make(-atom.term, Rel::Le)};
    case Rel::Le: return {Atom::make(-atom.term, Rel::Lt)};
    case Rel::Eq: return {Atom::make(atom.term, Rel::Lt), Atom::make(-atom.term, Rel::Lt)};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Formula construction

namespace {

const Formula& shared_true() {
  static const Formula f = Formula::make(Node{Kind::True, {}, {}, {}});
  return f;
}

const Formula& shared_false() {
  static const Formula f = Formula::make(Node{Kind::False, {}, {}, {}});
  return f;
}

}  // namespace

Formula::Formula() : node_(nullptr) { node_ = std::make_shared<const Node>(Node{Kind::True, {}, {}, {}}); }

Formula Formula::make(Node node) {
  Formula f;
  f.node_ = std::make_shared<const Node>(std::move(node));
  return f;
}

Formula mk_true() { return shared_true(); }
Formula mk_false() { return shared_false(); }
Formula mk_bool(bool value) { return value ? mk_true() : mk_false(); }

Formula mk_atom(const Atom& atom) {
  Atom a = Atom::make(atom.term, atom.rel);
  if (auto g = a.ground_value()) return mk_bool(*g);
  return Formula::make(Node{Kind::Atom, std::move(a), {}, {}});
}

Formula mk_not(const Formula& f) {
  switch (f.kind()) {
    case Kind::True: return mk_false();
    case Kind::False: return mk_true();
    case Kind::Not: return f.children().front();
    default: return Formula::make(Node{Kind::Not, {}, {f}, {}});
  }
}

Formula mk_and(std::vector<Formula> parts) {
  std::vector<Formula> flat;
  for (auto& p : parts) {
    if (p.is_false()) return mk_false();
    if (p.is_true()) continue;
    if (p.kind() == Kind::And) {
      flat.insert(flat.end(), p.children().begin(), p.children().end());
    } else {
      flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) return mk_true();
  if (flat.size() == 1) return flat.front();
  return Formula::make(Node{Kind::And, {}, std::move(flat), {}});
}

Formula mk_or(std::vector<Formula> parts) {
  std::vector<Formula> flat;
  for (auto& p : parts) {
    if (p.is_true()) return mk_true();
    if (p.is_false()) continue;
    if (p.kind() == Kind::Or) {
      flat.insert(flat.end(), p.children().begin(), p.children().end());
    } else {
      flat.push_back(std::move(p));
    }
  }
  if (flat.empty()) return mk_false();
  if (flat.size() == 1) return flat.front();
  return Formula::make(Node{Kind::Or, {}, std::move(flat), {}});
}

Formula mk_and(const Formula& a, const Formula& b) { return mk_and(std::vector<Formula>{a, b}); }
Formula mk_or(const Formula& a, const Formula& b) { return mk_or(std::vector<Formula>{a, b}); }
Formula mk_implies(const Formula& a, const Formula& b) { return mk_or(mk_not(a), b); }
Formula mk_iff(const Formula& a, const Formula& b) { return mk_and(mk_implies(a, b), mk_implies(b, a)); }

Formula mk_ite(const Formula& c, const Formula& a, const Formula& b) {
  return mk_or(mk_and(c, a), mk_and(nnf(mk_not(c)), b));
}

Formula mk_exists(std::vector<Var> vars, const Formula& body) {
  if (vars.empty() || body.is_true() || body.is_false()) return body;
  return Formula::make(Node{Kind::Exists, {}, {body}, std::move(vars)});
}

Formula mk_forall(std::vector<Var> vars, const Formula& body) {
  if (vars.empty() || body.is_true() || body.is_false()) return body;
  return Formula::make(Node{Kind::Forall, {}, {body}, std::move(vars)});
}

Formula lt(const LinearTerm& lhs, const LinearTerm& rhs) { return mk_atom(Atom{lhs - rhs, Rel::Lt}); }
Formula le(const LinearTerm& lhs, const LinearTerm& rhs) { return mk_atom(Atom{lhs - rhs, Rel::Le}); }
Formula eq(const LinearTerm& lhs, const LinearTerm& rhs) { return mk_atom(Atom{lhs - rhs, Rel::Eq}); }
Formula gt(const LinearTerm& lhs, const LinearTerm& rhs) { return lt(rhs, lhs); }
Formula ge(const LinearTerm& lhs, const LinearTerm& rhs) { return le(rhs, lhs); }
Formula ne(const LinearTerm& lhs, const LinearTerm& rhs) { return mk_or(lt(lhs, rhs), gt(lhs, rhs)); }

// ---------------------------------------------------------------------------
// Queries and transforms

namespace {

void collect_free(const Formula& f, std::set<Var>& bound, std::set<Var>& out) {
  switch (f.kind()) {
    case Kind::True:
    case Kind::False: return;
    case Kind::Atom:
      for (const auto& [v, c] : f.atom().term.coeffs()) {
        if (!bound.count(v)) out.insert(v);
      }
      return;
    case Kind::Exists:
    case Kind::Forall: {
      std::vector<Var> added;
      for (const auto& v : f.bound()) {
        if (bound.insert(v).second) added.push_back(v);
      }
      collect_free(f.children().front(), bound, out);
      for (const auto& v : added) bound.erase(v);
      return;
    }
    default:
      for (const auto& c : f.children()) collect_free(c, bound, out);
  }
}

}  // namespace

std::set<Var> free_vars(const Formula& f) {
  std::set<Var> bound;
  std::set<Var> out;
  collect_free(f, bound, out);
  return out;
}

bool is_quantifier_free(const Formula& f) {
  switch (f.kind()) {
    case Kind::Exists:
    case Kind::Forall: return false;
    default:
      return std::all_of(f.children().begin(), f.children().end(), is_quantifier_free);
  }
}

namespace {

Formula nnf_impl(const Formula& f, bool negate) {
  switch (f.kind()) {
    case Kind::True: return mk_bool(!negate);
    case Kind::False: return mk_bool(negate);
    case Kind::Atom: {
      if (!negate) return f;
      std::vector<Formula> parts;
      for (const auto& a : negate_atom(f.atom())) parts.push_back(mk_atom(a));
      return mk_or(std::move(parts));
    }
    case Kind::Not: return nnf_impl(f.children().front(), !negate);
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> parts;
      parts.reserve(f.children().size());
      for (const auto& c : f.children()) parts.push_back(nnf_impl(c, negate));
      bool conj = (f.kind() == Kind::And) != negate;
      return conj ? mk_and(std::move(parts)) : mk_or(std::move(parts));
    }
    case Kind::Exists:
    case Kind::Forall: {
      Formula body = nnf_impl(f.children().front(), negate);
      bool exists = (f.kind() == Kind::Exists) != negate;
      return exists ? mk_exists(f.bound(), body) : mk_forall(f.bound(), body);
    }
  }
  return f;
}

}  // namespace

Formula nnf(const Formula& f) { return nnf_impl(f, false); }

Var fresh_name(const Var& base, const std::set<Var>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 1;; ++i) {
    Var candidate = base + "!" + std::to_string(i);
    if (!taken.count(candidate)) return candidate;
  }
}

Formula substitute(const Formula& f, const std::map<Var, LinearTerm>& subst) {
  if (subst.empty()) return f;
  switch (f.kind()) {
    case Kind::True:
    case Kind::False: return f;
    case Kind::Atom: {
      LinearTerm t = f.atom().term;
      bool changed = false;
      for (const auto& [v, c] : f.atom().term.coeffs()) {
        auto it = subst.find(v);
        if (it != subst.end()) {
          t = t.substitute(v, it->second);
          changed = true;
        }
      }
      return changed ? mk_atom(Atom{t, f.atom().rel}) : f;
    }
    case Kind::Not: return mk_not(substitute(f.children().front(), subst));
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> parts;
      for (const auto& c : f.children()) parts.push_back(substitute(c, subst));
      return f.kind() == Kind::And ? mk_and(std::move(parts)) : mk_or(std::move(parts));
    }
    case Kind::Exists:
    case Kind::Forall: {
      // Drop substitutions for bound variables; rename binders that would capture.
      std::map<Var, LinearTerm> inner;
      std::set<Var> incoming;
      for (const auto& [v, t] : subst) {
        if (std::find(f.bound().begin(), f.bound().end(), v) != f.bound().end()) continue;
        inner.emplace(v, t);
        for (const auto& [w, c] : t.coeffs()) incoming.insert(w);
      }
      std::vector<Var> binders = f.bound();
      std::set<Var> taken = incoming;
      auto body_vars = free_vars(f.children().front());
      taken.insert(body_vars.begin(), body_vars.end());
      for (auto& b : binders) {
        if (incoming.count(b)) {
          Var renamed = fresh_name(b, taken);
          taken.insert(renamed);
          inner.emplace(b, LinearTerm::var(renamed));
          b = renamed;
        }
      }
      Formula body = substitute(f.children().front(), inner);
      return f.kind() == Kind::Exists ? mk_exists(binders, body) : mk_forall(binders, body);
    }
  }
  return f;
}

Formula rename(const Formula& f, const std::map<Var, Var>& renaming) {
  std::map<Var, LinearTerm> subst;
  for (const auto& [from, to] : renaming) subst.emplace(from, LinearTerm::var(to));
  return substitute(f, subst);
}

bool evaluate(const Formula& f, const std::function<Rational(const Var&)>& lookup) {
  switch (f.kind()) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Atom: return f.atom().holds(lookup);
    case Kind::Not: return !evaluate(f.children().front(), lookup);
    case Kind::And:
      return std::all_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return evaluate(c, lookup); });
    case Kind::Or:
      return std::any_of(f.children().begin(), f.children().end(),
                         [&](const Formula& c) { return evaluate(c, lookup); });
    case Kind::Exists:
    case Kind::Forall: throw std::logic_error("evaluate: formula has quantifiers");
  }
  return false;
}

// ---------------------------------------------------------------------------
// DNF

namespace {

// Merges two sorted conjunctions; nullopt when a ground-false atom appears.
Conjunction merge_conj(const Conjunction& a, const Conjunction& b) {
  Conjunction out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<Conjunction> dnf_impl(const Formula& f, std::size_t cap) {
  switch (f.kind()) {
    case Kind::True: return {Conjunction{}};
    case Kind::False: return {};
    case Kind::Atom: return {Conjunction{f.atom()}};
    case Kind::Or: {
      std::set<Conjunction> seen;
      std::vector<Conjunction> out;
      for (const auto& c : f.children()) {
        for (auto& d : dnf_impl(c, cap)) {
          if (seen.insert(d).second) out.push_back(std::move(d));
          if (out.size() > cap) throw DnfOverflow(cap);
        }
      }
      return out;
    }
    case Kind::And: {
      std::vector<Conjunction> acc{Conjunction{}};
      for (const auto& c : f.children()) {
        auto part = dnf_impl(c, cap);
        if (part.empty()) return {};
        if (acc.size() * part.size() > cap) throw DnfOverflow(cap);
        std::set<Conjunction> seen;
        std::vector<Conjunction> next;
        for (const auto& a : acc) {
          for (const auto& b : part) {
            auto m = merge_conj(a, b);
            if (seen.insert(m).second) next.push_back(std::move(m));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
    case Kind::Not:
      return dnf_impl(nnf(f), cap);
    case Kind::Exists:
    case Kind::Forall: throw std::logic_error("to_dnf: formula has quantifiers");
  }
  return {};
}

}  // namespace

std::vector<Conjunction> to_dnf(const Formula& f, std::size_t cap) { return dnf_impl(nnf(f), cap); }

Formula from_conjunction(const Conjunction& conj) {
  std::vector<Formula> parts;
  parts.reserve(conj.size());
  for (const auto& a : conj) parts.push_back(mk_atom(a));
  return mk_and(std::move(parts));
}

Formula from_dnf(const std::vector<Conjunction>& dnf) {
  std::vector<Formula> parts;
  parts.reserve(dnf.size());
  for (const auto& c : dnf) parts.push_back(from_conjunction(c));
  return mk_or(std::move(parts));
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const LinearTerm& t) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [v, c] : t.coeffs()) {
    Rational mag = abs(c);
    if (first) {
      if (sgn(c) < 0) out << "-";
    } else {
      out << (sgn(c) < 0 ? " - " : " + ");
    }
    if (mag != 1) out << mag.get_str() << "*";
    out << v;
    first = false;
  }
  if (first) {
    out << t.constant().get_str();
  } else if (t.constant() != 0) {
    out << (sgn(t.constant()) < 0 ? " - " : " + ") << Rational(abs(t.constant())).get_str();
  }
  return out.str();
}

namespace {

std::string rel_string(Rel rel) {
  switch (rel) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Eq: return "=";
  }
  return "?";
}

// Renders `term rel 0` as `vars rel -constant` for readability.
std::string atom_string(const Atom& a) {
  LinearTerm lhs = a.term - LinearTerm(a.term.constant());
  return to_string(lhs) + " " + rel_string(a.rel) + " " + Rational(-a.term.constant()).get_str();
}

std::string join_vars(const std::vector<Var>& vars) {
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) out += (i ? ", " : "") + vars[i];
  return out;
}

}  // namespace

std::string to_string(const Formula& f) {
  switch (f.kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return atom_string(f.atom());
    case Kind::Not: return "!(" + to_string(f.children().front()) + ")";
    case Kind::And:
    case Kind::Or: {
      std::string sep = f.kind() == Kind::And ? " & " : " | ";
      std::string out = "(";
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        out += (i ? sep : "") + to_string(f.children()[i]);
      }
      return out + ")";
    }
    case Kind::Exists: return "(exists " + join_vars(f.bound()) + ". " + to_string(f.children().front()) + ")";
    case Kind::Forall: return "(forall " + join_vars(f.bound()) + ". " + to_string(f.children().front()) + ")";
  }
  return "?";
}

std::string smt_symbol(const Var& name) {
  bool simple = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || std::string_view("~!@$%^&*_-+=<>.?/").find(c) != std::string_view::npos)) {
      simple = false;
    }
  }
  return simple ? name : "|" + name + "|";
}

std::string to_smtlib(const LinearTerm& t) {
  std::vector<std::string> parts;
  for (const auto& [v, c] : t.coeffs()) {
    if (c == 1) {
      parts.push_back(smt_symbol(v));
    } else {
      parts.push_back("(* " + volfair::to_smtlib(c) + " " + smt_symbol(v) + ")");
    }
  }
  if (t.constant() != 0 || parts.empty()) parts.push_back(volfair::to_smtlib(t.constant()));
  if (parts.size() == 1) return parts.front();
  std::string out = "(+";
  for (const auto& p : parts) out += " " + p;
  return out + ")";
}

namespace {

std::string smt_atom(const Atom& a) {
  // Move the constant to the right-hand side: vars rel -c.
  LinearTerm lhs = a.term - LinearTerm(a.term.constant());
  std::string op = a.rel == Rel::Lt ? "<" : a.rel == Rel::Le ? "<=" : "=";
  return "(" + op + " " + to_smtlib(lhs) + " " + volfair::to_smtlib(Rational(-a.term.constant())) + ")";
}

std::string smt_binders(const std::vector<Var>& vars) {
  std::string out = "(";
  for (const auto& v : vars) out += "(" + smt_symbol(v) + " Real)";
  return out + ")";
}

}  // namespace

std::string to_smtlib(const Formula& f) {
  switch (f.kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Atom: return smt_atom(f.atom());
    case Kind::Not: return "(not " + to_smtlib(f.children().front()) + ")";
    case Kind::And:
    case Kind::Or: {
      std::string out = f.kind() == Kind::And ? "(and" : "(or";
      for (const auto& c : f.children()) out += " " + to_smtlib(c);
      return out + ")";
    }
    case Kind::Exists: return "(exists " + smt_binders(f.bound()) + " " + to_smtlib(f.children().front()) + ")";
    case Kind::Forall: return "(forall " + smt_binders(f.bound()) + " " + to_smtlib(f.children().front()) + ")";
  }
  return "true";
}

}  // namespace volfair::logic
