#include <gtest/gtest.h>

#include "volfair/qe.hpp"
#include "volfair/smt.hpp"

using namespace volfair;
using namespace volfair::logic;
using namespace volfair::smt;

namespace {

LinearTerm V(const std::string& n) { return LinearTerm::var(n); }
LinearTerm C(long v) { return LinearTerm(Rational(v)); }

SolverConfig config() { return SolverConfig{default_solver_path()}; }

Hyperrectangle box(std::vector<Var> dims, std::vector<std::pair<long, long>> b) {
  std::vector<Interval> iv;
  for (auto [lo, hi] : b) iv.push_back(Interval{ExtValue::finite(lo), ExtValue::finite(hi)});
  return Hyperrectangle(std::move(dims), std::move(iv));
}

}  // namespace

TEST(SExprParse, ValuesAndNesting) {
  SExpr e = parse_sexpr("((x (/ 4.0 3.0)) (|a b| (- 2.5)))");
  ASSERT_TRUE(e.is_list);
  ASSERT_EQ(e.items.size(), 2u);
  EXPECT_EQ(*parse_value(e.items[0].items[1]), Rational(4, 3));
  EXPECT_EQ(e.items[1].items[0].atom, "|a b|");
  EXPECT_EQ(*parse_value(e.items[1].items[1]), Rational(-5, 2));
  EXPECT_EQ(*parse_value(parse_sexpr("(/ (- 1.0) 3.0)")), Rational(-1, 3));
  EXPECT_FALSE(parse_value(parse_sexpr("(root-obj x 1)")).has_value());
  EXPECT_THROW(parse_sexpr("(a b"), SolverError);
}

TEST(Process, SpawnFailureIsReported) {
  EXPECT_THROW(Session(SolverConfig{"/nonexistent/solver-binary"}), SpawnError);
}

TEST(SessionTest, SatWithModelInOpenInterval) {
  Session s(config());
  Answer a = s.check_and_model(mk_and(gt(V("x"), C(0)), lt(V("x"), C(1))), {"x"});
  ASSERT_EQ(a.result, Result::Sat);
  EXPECT_GT(a.model.at("x"), 0);
  EXPECT_LT(a.model.at("x"), 1);
  EXPECT_EQ(s.stats().queries, 1u);
  EXPECT_EQ(s.depth(), 0u);
}

TEST(SessionTest, Unsat) {
  Session s(config());
  EXPECT_EQ(s.check_and_model(mk_and(gt(V("x"), C(0)), lt(V("x"), C(0))), {"x"}).result, Result::Unsat);
}

TEST(SessionTest, PushPopAndReplayAfterRestart) {
  Session s(config());
  s.add(ge(V("x"), C(2)));
  s.push();
  s.add(le(V("x"), C(1)));
  EXPECT_EQ(s.check(), Result::Unsat);
  s.restart();
  EXPECT_EQ(s.check(), Result::Unsat);
  s.pop();
  EXPECT_EQ(s.check(), Result::Sat);
  s.restart();
  Answer a = s.check_and_model({"x"});
  ASSERT_EQ(a.result, Result::Sat);
  EXPECT_GE(a.model.at("x"), 2);
  EXPECT_EQ(s.stats().restarts, 2u);
}

TEST(SessionTest, QuotedSymbolsAndQuantifiers) {
  Session s(config());
  Formula f = mk_forall({"y"}, mk_implies(mk_and(le(C(0), V("y")), le(V("y"), C(1))), le(V("y"), V("a b"))));
  Answer a = s.check_and_model(f, {"a b"});
  ASSERT_EQ(a.result, Result::Sat);
  EXPECT_GE(a.model.at("a b"), 1);
}

TEST(SessionTest, SampledBoxAvoidsBlockedBox) {
  Session s(config());
  Decomposition d = decompose(mk_and(ge(V("x"), V("y")), ge(V("y"), C(0))), {"x", "y"});
  s.add(d.psi());
  Hyperrectangle first = box({"x", "y"}, {{3, 4}, {1, 2}});
  s.add(block(first, d.vars));
  for (int i = 0; i < 5; ++i) {
    Answer a = s.check_and_model(d.vars.endpoint_vars());
    ASSERT_EQ(a.result, Result::Sat);
    Hyperrectangle h = induced_rectangle(a.model, d.vars);
    EXPECT_FALSE(h.intersects(first));
    // Verified independently: H ∧ first is unsatisfiable.
    Session check(config());
    EXPECT_EQ(check.check_and_model(mk_and(h.to_formula(), first.to_formula()), {}).result, Result::Unsat);
    s.add(block(h, d.vars));
  }
}

TEST(ExtendBound, BoxRegionReachesEdge) {
  Formula phi = mk_and(le(C(0), V("x")), le(V("x"), C(10)));
  Decomposition d = decompose(phi, {"x"});
  Hyperrectangle h = box({"x"}, {{2, 3}});
  EXPECT_EQ(extend_bound(nullptr, d.psi(), h, d.vars, "x", Direction::Upper), ExtValue::finite(10));
  EXPECT_EQ(extend_bound(nullptr, d.psi(), h, d.vars, "x", Direction::Lower), ExtValue::finite(0));
  Session s(config());
  // Solver probing converges to within 2^-20 of the edge from inside.
  ExtValue probed = extend_bound(&s, d.quantified, h, d.vars, "x", Direction::Upper);
  ASSERT_TRUE(probed.is_finite());
  EXPECT_LE(probed.value, 10);
  EXPECT_GE(probed.value, Rational(10) - Rational(3, 1 << 20));
}

TEST(ExtendBound, UnboundedDirectionGoesToInfinity) {
  Decomposition d = decompose(mk_and(ge(V("x"), V("y")), ge(V("y"), C(0))), {"x", "y"});
  Hyperrectangle h = box({"x", "y"}, {{3, 4}, {1, 2}});
  EXPECT_EQ(extend_bound(nullptr, d.psi(), h, d.vars, "x", Direction::Upper), ExtValue::pos_inf());
  Session s(config());
  EXPECT_EQ(extend_bound(&s, d.quantified, h, d.vars, "x", Direction::Upper), ExtValue::pos_inf());
  // Probing: large finite endpoints remain satisfiable.
  for (long big : {100L, 100000L, 1000000000L}) {
    Hyperrectangle g = box({"x", "y"}, {{3, big}, {1, 2}});
    auto m = endpoint_assignment(g, d.vars);
    EXPECT_TRUE(substitute_endpoints(d.psi(), m).is_true());
  }
}

TEST(ExtendBound, StopsAtBlockedNeighbour) {
  Formula phi = mk_and(le(C(0), V("x")), le(V("x"), C(10)));
  Decomposition d = decompose(phi, {"x"});
  Hyperrectangle blocked = box({"x"}, {{6, 7}});
  Hyperrectangle h = box({"x"}, {{2, 3}});
  Hyperrectangle m = maximize_box(nullptr, d.psi(), {blocked}, h, d.vars);
  EXPECT_EQ(m.bound(0).lo, ExtValue::finite(0));
  EXPECT_LT(m.bound(0).hi, ExtValue::finite(6));
  EXPECT_GT(m.bound(0).hi, ExtValue::finite(Rational(59999, 10000)));
  EXPECT_FALSE(m.intersects(blocked));
  // The quantified path honours the same block.
  Session s(config());
  Hyperrectangle q = maximize_box(&s, d.quantified, {blocked}, h, d.vars);
  EXPECT_FALSE(q.intersects(blocked));
  EXPECT_GT(q.bound(0).hi, ExtValue::finite(Rational(59999, 10000)));
}

TEST(ExtendBound, MaximizeTwoDimensions) {
  // Triangle x ≥ y ≥ 0, x ≤ 4: from [3,3.5]×[1,2] the greedy pass widens both axes.
  Formula phi = mk_and({ge(V("x"), V("y")), ge(V("y"), C(0)), le(V("x"), C(4))});
  Decomposition d = decompose(phi, {"x", "y"});
  Hyperrectangle h({"x", "y"}, {Interval{ExtValue::finite(3), ExtValue::finite(Rational(7, 2))},
                                Interval{ExtValue::finite(1), ExtValue::finite(2)}});
  Hyperrectangle m = maximize_box(nullptr, d.psi(), {}, h, d.vars);
  EXPECT_TRUE(substitute_endpoints(d.psi(), endpoint_assignment(m, d.vars)).is_true());
  EXPECT_TRUE(m.contains(h));
  EXPECT_EQ(m.bound(0).hi, ExtValue::finite(4));
  EXPECT_EQ(m.bound(1).lo, ExtValue::finite(0));
}

TEST(QeEquivalence, SmtCheckedOnSmallFixtures) {
  Session s(config());
  std::vector<Formula> fixtures{
      mk_exists({"y"}, mk_and(ge(V("x"), V("y")), ge(V("y"), C(0)))),
      mk_forall({"x"}, mk_implies(mk_and(le(V("l"), V("x")), le(V("x"), V("u"))), ge(V("x") + V("z"), C(1)))),
      mk_exists({"a", "b"}, mk_and({lt(V("a"), V("b")), le(V("b"), V("c")), mk_or(eq(V("a"), V("d")), gt(V("a"), C(3)))})),
  };
  for (const auto& f : fixtures) {
    Formula q = eliminate_quantifiers(f, kDefaultDnfCap);
    EXPECT_EQ(s.check_and_model(mk_and(f, mk_not(q)), {}).result, Result::Unsat) << to_string(q);
    EXPECT_EQ(s.check_and_model(mk_and(mk_not(f), q), {}).result, Result::Unsat) << to_string(q);
  }
}
