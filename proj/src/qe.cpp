#include "volfair/qe.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace volfair::logic {

std::optional<Conjunction> simplify(Conjunction conj) {
  // Inequalities sharing a variable part keep only the tightest one.
  std::map<std::map<Var, Rational>, Atom> tightest;
  std::map<std::map<Var, Rational>, Atom> equalities;
  for (const auto& raw : conj) {
    Atom a = Atom::make(raw.term, raw.rel);
    if (auto g = a.ground_value()) {
      if (!*g) return std::nullopt;
      continue;
    }
    if (a.rel == Rel::Eq) {
      auto [it, inserted] = equalities.emplace(a.term.coeffs(), a);
      if (!inserted && it->second.term.constant() != a.term.constant()) return std::nullopt;
      continue;
    }
    auto [it, inserted] = tightest.emplace(a.term.coeffs(), a);
    if (inserted) continue;
    Atom& cur = it->second;
    // vars + c ⋈ 0: a larger constant is the stronger bound; strict wins ties.
    if (a.term.constant() > cur.term.constant() ||
        (a.term.constant() == cur.term.constant() && a.rel == Rel::Lt)) {
      cur = a;
    }
  }

  Conjunction out;
  out.reserve(tightest.size() + equalities.size());
  for (auto& [k, a] : equalities) out.push_back(std::move(a));
  for (auto& [k, a] : tightest) {
    // An equality with the same variable part decides the inequality outright.
    auto eq = equalities.find(k);
    if (eq != equalities.end()) {
      // vars = -e; inequality vars + c ⋈ 0 becomes c - e ⋈ 0.
      Rational value = a.term.constant() - eq->second.term.constant();
      bool holds = a.rel == Rel::Lt ? value < 0 : value <= 0;
      if (!holds) return std::nullopt;
      continue;
    }
    // Opposite parallel inequalities: vars + c1 ⋈ 0 and -vars + c2 ⋈ 0 require c1 + c2 ⋈ 0.
    std::map<Var, Rational> neg;
    for (const auto& [v, c] : k) neg.emplace(v, -c);
    auto opp = tightest.find(neg);
    if (opp != tightest.end()) {
      Rational sum = a.term.constant() + opp->second.term.constant();
      bool strict = a.rel == Rel::Lt || opp->second.rel == Rel::Lt;
      if (strict ? !(sum < 0) : !(sum <= 0)) return std::nullopt;
    }
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

struct Occurrence {
  std::size_t lower = 0;
  std::size_t upper = 0;
  bool in_equality = false;
};

Occurrence count(const Conjunction& conj, const Var& v) {
  Occurrence occ;
  for (const auto& a : conj) {
    Rational c = a.term.coeff(v);
    if (c == 0) continue;
    if (a.rel == Rel::Eq) {
      occ.in_equality = true;
    } else if (sgn(c) > 0) {
      ++occ.upper;
    } else {
      ++occ.lower;
    }
  }
  return occ;
}

Conjunction eliminate_one(const Conjunction& conj, const Var& v) {
  // Equality available: substitute.
  for (std::size_t i = 0; i < conj.size(); ++i) {
    const Atom& a = conj[i];
    Rational c = a.term.coeff(v);
    if (a.rel != Rel::Eq || c == 0) continue;
    // c*v + rest = 0  =>  v = -rest / c
    LinearTerm rest = a.term - LinearTerm::var(v, c);
    LinearTerm value = rest * Rational(-1 / c);
    Conjunction out;
    out.reserve(conj.size() - 1);
    for (std::size_t j = 0; j < conj.size(); ++j) {
      if (j == i) continue;
      out.push_back(Atom::make(conj[j].term.substitute(v, value), conj[j].rel));
    }
    return out;
  }

  Conjunction keep;
  std::vector<Atom> lowers;  // -v + r ⋈ 0, i.e. v ⋈' r
  std::vector<Atom> uppers;  //  v + r ⋈ 0
  for (const auto& a : conj) {
    Rational c = a.term.coeff(v);
    if (c == 0) {
      keep.push_back(a);
      continue;
    }
    Atom scaled{a.term * Rational(1 / abs(c)), a.rel};
    (sgn(c) > 0 ? uppers : lowers).push_back(std::move(scaled));
  }
  for (const auto& lo : lowers) {
    for (const auto& up : uppers) {
      LinearTerm sum = lo.term + up.term;
      Rel rel = (lo.rel == Rel::Lt || up.rel == Rel::Lt) ? Rel::Lt : Rel::Le;
      keep.push_back(Atom::make(sum, rel));
    }
  }
  return keep;
}

}  // namespace

std::optional<Conjunction> fm_project(Conjunction conj, const std::vector<Var>& vars) {
  auto current = simplify(std::move(conj));
  if (!current) return std::nullopt;
  std::set<Var> pending(vars.begin(), vars.end());
  while (!pending.empty()) {
    // Cheapest variable first: equalities, then the smallest lower×upper product.
    Var best;
    long best_cost = -1;
    for (auto it = pending.begin(); it != pending.end();) {
      Occurrence occ = count(*current, *it);
      if (!occ.in_equality && occ.lower == 0 && occ.upper == 0) {
        it = pending.erase(it);
        continue;
      }
      long cost = occ.in_equality
                      ? 0
                      : static_cast<long>(occ.lower * occ.upper) - static_cast<long>(occ.lower + occ.upper) + 1000000;
      if (best_cost < 0 || cost < best_cost) {
        best = *it;
        best_cost = cost;
      }
      ++it;
    }
    if (best_cost < 0) break;
    pending.erase(best);
    current = simplify(eliminate_one(*current, best));
    if (!current) return std::nullopt;
  }
  return current;
}

std::vector<Conjunction> project_dnf(const std::vector<Conjunction>& dnf, const std::vector<Var>& vars) {
  std::set<Conjunction> seen;
  std::vector<Conjunction> out;
  for (const auto& d : dnf) {
    auto projected = fm_project(d, vars);
    if (!projected) continue;
    if (projected->empty()) return {Conjunction{}};  // true
    if (seen.insert(*projected).second) out.push_back(std::move(*projected));
  }
  return out;
}

Formula eliminate_quantifiers(const Formula& f, std::size_t dnf_cap) {
  switch (f.kind()) {
    case Kind::True:
    case Kind::False:
    case Kind::Atom: return f;
    case Kind::Not: return mk_not(eliminate_quantifiers(f.children().front(), dnf_cap));
    case Kind::And:
    case Kind::Or: {
      std::vector<Formula> parts;
      for (const auto& c : f.children()) parts.push_back(eliminate_quantifiers(c, dnf_cap));
      return f.kind() == Kind::And ? mk_and(std::move(parts)) : mk_or(std::move(parts));
    }
    case Kind::Exists: {
      Formula body = eliminate_quantifiers(f.children().front(), dnf_cap);
      return from_dnf(project_dnf(to_dnf(body, dnf_cap), f.bound()));
    }
    case Kind::Forall: {
      Formula body = eliminate_quantifiers(f.children().front(), dnf_cap);
      Formula inner = from_dnf(project_dnf(to_dnf(mk_not(body), dnf_cap), f.bound()));
      return nnf(mk_not(inner));
    }
  }
  return f;
}

}  // namespace volfair::logic
