#include <algorithm>
#include <functional>

#include "volfair/smt.hpp"

namespace volfair::smt {

using logic::ExtValue;
using logic::Hyperrectangle;
using logic::IntervalSet;

namespace {

const Rational kTolerance = Rational(1, 1 << 20);

Var target_of(const logic::BoxVars& vars, const Var& dim, Direction dir) {
  return dir == Direction::Upper ? vars.upper.at(dim) : vars.lower.at(dim);
}

// Constraint on the target endpoint imposed by keeping clear of the blocked boxes.
IntervalSet clearance(const std::vector<Hyperrectangle>& blocked, const Hyperrectangle& box, std::size_t dim_index,
                      Direction dir) {
  IntervalSet allowed = IntervalSet::all();
  const Var& dim = box.dims()[dim_index];
  const logic::Interval& cur = box.bound(dim_index);
  for (const auto& b : blocked) {
    bool overlaps_elsewhere = true;
    for (std::size_t i = 0; i < box.size() && overlaps_elsewhere; ++i) {
      if (i == dim_index) continue;
      const logic::Interval& mine = box.bound(i);
      const logic::Interval& theirs = b.bound(box.dims()[i]);
      overlaps_elsewhere = !(mine.hi < theirs.lo || theirs.hi < mine.lo);
    }
    if (!overlaps_elsewhere) continue;
    const logic::Interval& theirs = b.bound(dim);
    if (dir == Direction::Upper) {
      if (theirs.hi < cur.lo) continue;
      if (!theirs.lo.is_finite()) return IntervalSet::empty();
      allowed = allowed.intersect(IntervalSet::below(theirs.lo.value, false));
    } else {
      if (cur.hi < theirs.lo) continue;
      if (!theirs.hi.is_finite()) return IntervalSet::empty();
      allowed = allowed.intersect(IntervalSet::above(theirs.hi.value, false));
    }
  }
  return allowed;
}

ExtValue furthest_in_component(const IntervalSet& feasible, const Rational& c, Direction dir,
                               const std::function<bool()>& limit_holds) {
  auto comp = feasible.component(c);
  if (!comp) return ExtValue::finite(c);
  const ExtValue& edge = dir == Direction::Upper ? comp->hi : comp->lo;
  bool closed = dir == Direction::Upper ? comp->hi_closed : comp->lo_closed;
  if (!edge.is_finite()) return limit_holds() ? edge : ExtValue::finite(c);
  if (closed) return edge;
  // Open edge: back off by a small fraction of the gained width.
  Rational gain = edge.value - c;
  return ExtValue::finite(Rational(c + gain - gain * kTolerance));
}

ExtValue exact_extend(const Formula& psi, std::map<Var, ExtValue> others, const Var& target, const Rational& c,
                      Direction dir, const IntervalSet& allowed) {
  Formula f = logic::substitute_endpoints(psi, others);
  IntervalSet feasible = logic::feasible_set(f, target).intersect(allowed);
  auto limit = [&] {
    others[target] = dir == Direction::Upper ? ExtValue::pos_inf() : ExtValue::neg_inf();
    return logic::substitute_endpoints(psi, others).is_true();
  };
  return furthest_in_component(feasible, c, dir, limit);
}

ExtValue probe_extend(Session& session, const Formula& psi, std::map<Var, ExtValue> others, const Var& target,
                      const Rational& c, Direction dir, const IntervalSet& allowed) {
  Formula f = logic::substitute_endpoints(psi, others);
  auto component = allowed.component(c);
  if (!component) return ExtValue::finite(c);

  auto holds = [&](const ExtValue& v) -> std::optional<bool> {
    Formula g = logic::substitute_endpoints(f, {{target, v}});
    if (g.is_true()) return true;
    if (g.is_false()) return false;
    Answer a = session.check_and_model(g, {});
    if (a.result == Result::Unknown) return std::nullopt;
    return a.result == Result::Sat;
  };
  int sign = dir == Direction::Upper ? 1 : -1;
  const ExtValue& edge = dir == Direction::Upper ? component->hi : component->lo;
  auto inside = [&](const Rational& v) { return allowed.contains(v); };

  if (!edge.is_finite()) {
    auto inf = holds(edge);
    if (!inf) return ExtValue::finite(c);
    if (*inf) return edge;
  }

  Rational scale = abs(c) > 1 ? Rational(abs(c)) : Rational(1);
  Rational good = c;
  Rational step = scale;
  std::optional<Rational> bad;
  for (int i = 0; i < 64; ++i) {
    Rational cand = good + sign * step;
    if (!inside(cand)) {
      bad = cand;
      break;
    }
    auto ok = holds(ExtValue::finite(cand));
    if (!ok) return ExtValue::finite(good);
    if (!*ok) {
      bad = cand;
      break;
    }
    good = cand;
    step *= 2;
  }
  if (!bad) return ExtValue::finite(good);
  while (abs(*bad - good) > kTolerance * scale) {
    Rational mid = (good + *bad) / 2;
    auto ok = inside(mid) ? holds(ExtValue::finite(mid)) : std::optional<bool>(false);
    if (!ok) break;
    (*ok ? good : *bad) = mid;
  }
  return ExtValue::finite(good);
}

ExtValue extend_one(Session* session, const Formula& psi, const std::vector<Hyperrectangle>& blocked,
                    const Hyperrectangle& box, const logic::BoxVars& vars, std::size_t dim_index, Direction dir) {
  const Var& dim = box.dims()[dim_index];
  Var target = target_of(vars, dim, dir);
  auto others = logic::endpoint_assignment(box, vars);
  ExtValue current = others.at(target);
  if (!current.is_finite()) return current;
  others.erase(target);
  IntervalSet allowed = clearance(blocked, box, dim_index, dir);
  if (logic::is_quantifier_free(psi)) return exact_extend(psi, others, target, current.value, dir, allowed);
  if (!session) return current;
  return probe_extend(*session, psi, others, target, current.value, dir, allowed);
}

}  // namespace

ExtValue extend_bound(Session* session, const Formula& psi, const Hyperrectangle& box, const logic::BoxVars& vars,
                      const Var& dim, Direction dir) {
  auto it = std::find(box.dims().begin(), box.dims().end(), dim);
  if (it == box.dims().end()) throw std::out_of_range("box has no dimension " + dim);
  return extend_one(session, psi, {}, box, vars, static_cast<std::size_t>(it - box.dims().begin()), dir);
}

Hyperrectangle maximize_box(Session* session, const Formula& psi, const std::vector<Hyperrectangle>& blocked,
                            const Hyperrectangle& box, const logic::BoxVars& vars, int passes) {
  Hyperrectangle cur = box;
  for (int pass = 0; pass < passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      for (Direction dir : {Direction::Lower, Direction::Upper}) {
        ExtValue e = extend_one(session, psi, blocked, cur, vars, i, dir);
        ExtValue& slot = dir == Direction::Lower ? cur.bound(i).lo : cur.bound(i).hi;
        bool better = dir == Direction::Lower ? e < slot : slot < e;
        if (better) {
          slot = e;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
  return cur;
}

}  // namespace volfair::smt
