#include "volfair/fairness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

namespace volfair::fairness {

FairnessProblem FairnessProblem::from_file(const lang::SourceFile& file, double epsilon) {
  if (!(epsilon >= 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in [0, 1)");
  FairnessProblem p;
  p.composed = pvc::compose_file(file);
  if (!p.composed.target) throw std::invalid_argument("the program marks no fairness target");
  p.target = *p.composed.target;
  p.sensitive = p.composed.sensitive;
  if (p.composed.qualified) p.qualified = *p.composed.qualified;
  p.epsilon = epsilon;
  return p;
}

std::vector<Quantity> build_quantities(const FairnessProblem& p) {
  using logic::mk_and;
  using logic::mk_not;
  auto region = [&](const Formula& f) { return pvc::event_region(p.composed, f); };
  if (p.probability_only()) return {{"Pr[F]", region(p.target)}};
  const Formula& f = p.target;
  const Formula& s = *p.sensitive;
  const Formula& q = p.qualified;
  return {
      {"Pr[F&S&Q]", region(mk_and({f, s, q}))},
      {"Pr[F&!S&Q]", region(mk_and({f, mk_not(s), q}))},
      {"Pr[!S&Q]", region(mk_and(mk_not(s), q))},
      {"Pr[S&Q]", region(mk_and(s, q))},
  };
}

namespace {

// x / y for nonnegative operands, with 0 → ∞ in the denominator.
double upper_quotient(double x, double y) {
  if (y <= 0) return x <= 0 ? 0.0 : kInfinity;
  return x / y;
}

// x / y for nonnegative operands, with 0 → 0 in the denominator.
double lower_quotient(double x, double y) {
  if (y <= 0 || std::isinf(y)) return 0.0;
  return x / y;
}

}  // namespace

RatioBounds ratio_bounds(const BoundPair& n1, const BoundPair& d1, const BoundPair& n2, const BoundPair& d2) {
  RatioBounds r;
  r.lo = lower_quotient(n1.lower * n2.lower, d1.upper * d2.upper);
  r.hi = d1.lower * d2.lower <= 0 ? kInfinity : upper_quotient(n1.upper * n2.upper, d1.lower * d2.lower);
  return r;
}

std::string to_string(Truth t) {
  switch (t) {
    case Truth::True: return "true";
    case Truth::False: return "false";
    case Truth::Unknown: return "unknown";
  }
  return "?";
}

PExpPtr prob(const std::string& event) {
  auto e = std::make_shared<PExp>();
  e->op = PExp::Op::Prob;
  e->event = event;
  return e;
}

PExpPtr constant(double v) {
  auto e = std::make_shared<PExp>();
  e->op = PExp::Op::Const;
  e->value = v;
  return e;
}

PExpPtr apply(PExp::Op op, std::vector<PExpPtr> args) {
  auto e = std::make_shared<PExp>();
  e->op = op;
  e->args = std::move(args);
  return e;
}

PExpPtr conditional(const std::string& joint, const std::string& given) {
  return apply(PExp::Op::Div, {prob(joint), prob(given)});
}

PExpPtr group_fairness(double epsilon) {
  PExpPtr minority = conditional("Pr[F&S&Q]", "Pr[S&Q]");
  PExpPtr majority = conditional("Pr[F&!S&Q]", "Pr[!S&Q]");
  return apply(PExp::Op::Gt, {apply(PExp::Op::Div, {minority, majority}), constant(1 - epsilon)});
}

namespace {

Range multiply(Range a, Range b) {
  double c[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  Range r{c[0], c[0]};
  for (double x : c) {
    // 0·∞ arises only from an exact zero factor; the product is then 0.
    if (std::isnan(x)) x = 0;
    r.lo = std::min(r.lo, x);
    r.hi = std::max(r.hi, x);
  }
  if (std::isnan(r.lo)) r.lo = 0;
  if (std::isnan(r.hi)) r.hi = 0;
  return r;
}

Range divide(Range a, Range b) {
  if (a.lo >= 0 && b.lo >= 0) return {lower_quotient(a.lo, b.hi), upper_quotient(a.hi, b.lo)};
  if (b.lo <= 0 && b.hi >= 0) return {-kInfinity, kInfinity};
  return multiply(a, Range{1 / b.hi, 1 / b.lo});
}

Truth kleene_and(Truth a, Truth b) {
  if (a == Truth::False || b == Truth::False) return Truth::False;
  if (a == Truth::True && b == Truth::True) return Truth::True;
  return Truth::Unknown;
}

Truth kleene_not(Truth a) {
  if (a == Truth::Unknown) return a;
  return a == Truth::True ? Truth::False : Truth::True;
}

}  // namespace

Range eval_range(const PExp& e, const std::map<std::string, BoundPair>& bounds) {
  auto arg = [&](int i) { return eval_range(*e.args.at(i), bounds); };
  switch (e.op) {
    case PExp::Op::Prob: {
      auto it = bounds.find(e.event);
      if (it == bounds.end()) throw std::invalid_argument("no bounds for " + e.event);
      return {it->second.lower, it->second.upper};
    }
    case PExp::Op::Const: return {e.value, e.value};
    case PExp::Op::Add: {
      Range a = arg(0), b = arg(1);
      return {a.lo + b.lo, a.hi + b.hi};
    }
    case PExp::Op::Sub: {
      Range a = arg(0), b = arg(1);
      return {a.lo - b.hi, a.hi - b.lo};
    }
    case PExp::Op::Mul: return multiply(arg(0), arg(1));
    case PExp::Op::Div: return divide(arg(0), arg(1));
    default: throw std::invalid_argument("expected a probability expression");
  }
}

Truth eval_pexp(const PExp& e, const std::map<std::string, BoundPair>& bounds) {
  auto cmp = [&](bool strict_greater, bool flip) {
    Range a = eval_range(*e.args.at(flip ? 1 : 0), bounds);
    Range b = eval_range(*e.args.at(flip ? 0 : 1), bounds);
    // a > b (strict) or a ≥ b
    if (strict_greater ? a.lo > b.hi : a.lo >= b.hi) return Truth::True;
    if (strict_greater ? a.hi <= b.lo : a.hi < b.lo) return Truth::False;
    return Truth::Unknown;
  };
  switch (e.op) {
    case PExp::Op::Gt: return cmp(true, false);
    case PExp::Op::Ge: return cmp(false, false);
    case PExp::Op::Lt: return cmp(true, true);
    case PExp::Op::Le: return cmp(false, true);
    case PExp::Op::And: return kleene_and(eval_pexp(*e.args.at(0), bounds), eval_pexp(*e.args.at(1), bounds));
    case PExp::Op::Or:
      return kleene_not(kleene_and(kleene_not(eval_pexp(*e.args.at(0), bounds)),
                                   kleene_not(eval_pexp(*e.args.at(1), bounds))));
    case PExp::Op::Not: return kleene_not(eval_pexp(*e.args.at(0), bounds));
    default: throw std::invalid_argument("expected a comparison or connective");
  }
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Fair: return "FAIR";
    case Outcome::Unfair: return "UNFAIR";
    case Outcome::Unknown: return "UNKNOWN";
  }
  return "?";
}

Verdict fair_verify(const FairnessProblem& p, const VerifyConfig& cfg, const smt::SolverConfig& solver) {
  using clock = std::chrono::steady_clock;
  auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

  Verdict v;
  std::vector<Quantity> quantities = build_quantities(p);
  for (const auto& q : quantities) v.quantities.emplace_back(q.name, BoundPair{});
  if (cfg.max_rounds == 0) {
    v.note = "no rounds allowed";
    v.elapsed = elapsed();
    return v;
  }

  std::vector<std::unique_ptr<volume::BoundRunner>> runners;
  auto snapshot = [&] {
    v.queries = 0;
    for (std::size_t i = 0; i < runners.size(); ++i) {
      v.quantities[i].second = runners[i]->bounds();
      v.queries += runners[i]->queries();
    }
    if (p.probability_only()) {
      v.ratio = {v.quantities[0].second.lower, v.quantities[0].second.upper};
    } else {
      v.ratio = ratio_bounds(v.quantities[0].second, v.quantities[1].second, v.quantities[2].second,
                             v.quantities[3].second);
    }
    v.elapsed = elapsed();
  };

  try {
    for (const auto& q : quantities) {
      runners.push_back(std::make_unique<volume::BoundRunner>(q.region, p.composed.densities, cfg.sampler, solver));
    }
    const double threshold = 1 - p.epsilon;
    while (v.rounds < cfg.max_rounds) {
      if (elapsed() >= cfg.timeout_secs) {
        v.note = "timeout";
        break;
      }
      if (cfg.parallel) {
        std::vector<std::future<void>> jobs;
        for (auto& r : runners) {
          jobs.push_back(std::async(std::launch::async, [&r] { r->step_positive(); }));
          jobs.push_back(std::async(std::launch::async, [&r] { r->step_negative(); }));
        }
        for (auto& j : jobs) j.get();
      } else {
        for (auto& r : runners) r->round();
      }
      ++v.rounds;
      snapshot();
      if (cfg.on_round) cfg.on_round(TraceRecord{v.rounds, v.quantities, v.ratio, v.queries, v.elapsed});

      if (p.probability_only()) {
        if (v.ratio.hi - v.ratio.lo <= cfg.target_width || runners[0]->settled()) break;
        continue;
      }
      if (v.ratio.lo > threshold) {
        v.outcome = Outcome::Fair;
        return v;
      }
      if (v.ratio.hi <= threshold) {
        v.outcome = Outcome::Unfair;
        return v;
      }
      if (std::all_of(runners.begin(), runners.end(), [](const auto& r) { return r->settled(); })) {
        v.note = "all samplers exhausted";
        break;
      }
    }
    if (v.note.empty() && v.rounds >= cfg.max_rounds) v.note = "round limit";
  } catch (const smt::SpawnError&) {
    throw;
  } catch (const smt::SolverError& e) {
    v.note = std::string("solver failure: ") + e.what();
    v.outcome = Outcome::Unknown;
    if (runners.size() == quantities.size()) snapshot();
  }
  if (!runners.empty()) {
    for (const auto& r : runners) {
      if (v.note.empty() && !r->last_unknown().empty()) v.note = "solver unknown: " + r->last_unknown();
    }
  }
  v.elapsed = elapsed();
  return v;
}

}  // namespace volfair::fairness
