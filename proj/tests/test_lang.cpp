#include <gtest/gtest.h>

#include <random>

#include "volfair/lang.hpp"

using namespace volfair;
using namespace volfair::lang;

namespace {

std::string fixture(const std::string& name) { return std::string(VOLFAIR_FIXTURE_DIR) + "/" + name; }

OmegaSequences omega_of(std::vector<std::vector<double>> per_site) {
  OmegaSequences o;
  for (auto& q : per_site) o.queues.emplace_back(q.begin(), q.end());
  return o;
}

const Stmt* find_assign(const std::vector<Stmt>& body, const Var& v) {
  for (const auto& s : body) {
    if (s.kind != Stmt::Kind::Cond && s.var == v) return &s;
    if (s.kind == Stmt::Kind::Cond) {
      if (auto* t = find_assign(s.then_body, v)) return t;
      if (auto* e = find_assign(s.else_body, v)) return e;
    }
  }
  return nullptr;
}

}  // namespace

TEST(Parse, SvmFixtureVerbatim) {
  SourceFile f = parse_file(fixture("svm_independent.dsl"));
  EXPECT_EQ(f.pop.prob_vars, (std::set<Var>{"age", "sex", "capital_gain", "capital_loss"}));
  ASSERT_TRUE(f.pop.markers.sensitive);
  EXPECT_EQ(to_string(*f.pop.markers.sensitive), "(sex < 1)");
  ASSERT_TRUE(f.dec);
  ASSERT_TRUE(f.dec->markers.target);
  EXPECT_EQ(to_string(*f.dec->markers.target), "(t < 0)");
  // The decision program reads population variables, which become its inputs.
  EXPECT_EQ(std::set<Var>(f.dec->inputs.begin(), f.dec->inputs.end()),
            (std::set<Var>{"age", "sex", "capital_gain", "capital_loss"}));
  // The continued `t = ...` line is a single expression.
  const Stmt* t = find_assign(f.dec->body, "t");
  ASSERT_NE(t, nullptr);
  EXPECT_NE(to_string(*t->expr).find("10003/10000"), std::string::npos);
  // gaussian takes a variance.
  const auto& g = std::get<dist::Gaussian>(find_assign(f.pop.body, "age")->dist->dist);
  EXPECT_NEAR(g.stddev, std::sqrt(186.0614), 1e-12);
}

TEST(Parse, MinimalProgram) {
  SourceFile f = parse_program("x ~ gaussian(0,1)\n");
  EXPECT_EQ(f.pop.prob_vars, std::set<Var>{"x"});
  EXPECT_TRUE(f.pop.det_vars.empty());
  EXPECT_FALSE(f.pop.markers.sensitive || f.pop.markers.qualified || f.pop.markers.target);
  EXPECT_FALSE(f.dec.has_value());
  EXPECT_TRUE(f.pop.inputs.empty());
}

TEST(Parse, GaussConventions) {
  SourceFile f = parse_program("a ~ gauss(1, 2)\nb ~ gaussian(1, 4)\n");
  EXPECT_DOUBLE_EQ(std::get<dist::Gaussian>(f.pop.body[0].dist->dist).stddev, 2.0);
  EXPECT_DOUBLE_EQ(std::get<dist::Gaussian>(f.pop.body[1].dist->dist).stddev, 2.0);
}

TEST(Parse, Errors) {
  try {
    parse_program("t = x\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.detail(), "read before assignment of 'x'");
    EXPECT_EQ(e.loc().line, 1);
    EXPECT_EQ(e.loc().column, 5);
  }
  EXPECT_THROW(parse_program("x ~ cauchy(0, 1)\n"), ParseError);
  EXPECT_THROW(parse_program("y ~ gauss(0,1)\nx ~ gauss(y, 1)\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ gaussian(0)\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ step([(1, 0, 1)])\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ step([(0, 1, 0)])\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ gauss(0,1)\nfairnessTarget(x < 0)\nfairnessTarget(x > 0)\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ gauss(0,1)\nif x > 0:\n  y = 1\nz = y\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ gauss(0,1)\n  y = 2\n"), ParseError);
  EXPECT_THROW(parse_program("x ~ gauss(0,1) $\n"), ParseError);
}

TEST(Parse, StepWeightsNormalizedWithWarning) {
  SourceFile f = parse_program("s ~ step([(0, 1, 1), (1, 2, 3)])\n");
  ASSERT_EQ(f.warnings.size(), 1u);
  const auto& st = std::get<dist::Step>(f.pop.body[0].dist->dist);
  EXPECT_EQ(st.segments[1].height, Rational(3, 4));
}

TEST(Ssa, HiringVersionsMatchEncoding) {
  SourceFile f = parse_file(fixture("hiring_original.dsl"));
  Program s = to_ssa(f.pop);
  EXPECT_TRUE(s.all_vars.count("colRank"));
  EXPECT_TRUE(s.all_vars.count("colRank_1"));
  EXPECT_FALSE(s.all_vars.count("colRank_2"));
  EXPECT_EQ(s.final_names.at("colRank"), "colRank_1");
  EXPECT_EQ(s.prob_vars, (std::set<Var>{"ethnicity", "colRank", "yExp"}));
  EXPECT_EQ(s.det_vars, std::set<Var>{"colRank_1"});
  EXPECT_EQ(s.outputs, (std::vector<Var>{"colRank_1", "yExp"}));
}

TEST(Ssa, StraightLineUnchanged) {
  SourceFile f = parse_program("x ~ gauss(0,2); y ~ gauss(-1,1); z = x + y\n");
  Program s = to_ssa(f.pop);
  EXPECT_EQ(s.all_vars, f.pop.all_vars);
  EXPECT_EQ(s.body.size(), 3u);
  EXPECT_EQ(s.body[2].var, "z");
}

TEST(Ssa, OneSidedAssignmentGetsMerge) {
  SourceFile f = parse_program("x ~ gauss(0,1)\nif x > 0:\n    x = x + 1\ny = x\n");
  Program s = to_ssa(f.pop);
  EXPECT_EQ(s.final_names.at("x"), "x_1");
  const Stmt& cond = s.body[1];
  ASSERT_EQ(cond.else_body.size(), 1u);
  EXPECT_EQ(cond.else_body[0].var, "x_1");
  EXPECT_EQ(to_string(*s.body[2].expr), "x_1");
}

TEST(Ssa, NameCollisionAvoided) {
  SourceFile f = parse_program("x ~ gauss(0,1)\nx_1 = 3\nx = x + x_1\n");
  Program s = to_ssa(f.pop);
  EXPECT_EQ(s.final_names.at("x"), "x_2");
  EXPECT_EQ(s.final_names.at("x_1"), "x_1");
}

TEST(Ssa, InterpreterAgreesOnRandomOmega) {
  for (const char* name : {"hiring_original.dsl", "svm_bayesnet.dsl", "svm_independent.dsl"}) {
    SourceFile f = parse_file(fixture(name));
    Program s = to_ssa(f.pop);
    std::optional<Program> sd;
    if (f.dec) sd = to_ssa(*f.dec);
    for (std::uint64_t k = 0; k < 100; ++k) {
      OmegaSequences a = OmegaSequences::draw(f, 1, k);
      OmegaSequences b = a;
      State orig = interpret(f.pop, a);
      State ssa = interpret(s, b);
      for (const auto& [src, ver] : s.final_names) {
        if (orig.count(src)) EXPECT_EQ(orig.at(src), ssa.at(ver)) << name << " " << src;
      }
      if (f.dec) {
        State od = interpret(*f.dec, a, link_inputs(f, orig));
        State sdv = interpret(*sd, b, link_inputs(f, orig));
        for (const auto& [src, ver] : sd->final_names) {
          if (od.count(src)) EXPECT_EQ(od.at(src), sdv.at(ver)) << name << " " << src;
        }
      }
    }
  }
}

TEST(Interpret, SumQuery) {
  SourceFile f = parse_file(fixture("sum_query.dsl"));
  OmegaSequences o = omega_of({{1.0}, {-0.5}});
  EXPECT_DOUBLE_EQ(interpret(f.pop, o).at("z"), 0.5);
}

TEST(Interpret, HiringBranch) {
  SourceFile f = parse_file(fixture("hiring_original.dsl"));
  Program s = to_ssa(f.pop);
  OmegaSequences o = omega_of({{12}, {10}, {8}});
  EXPECT_DOUBLE_EQ(interpret(s, o).at("colRank_1"), 15.0);
}

TEST(Interpret, DeterministicAndUnderflow) {
  SourceFile f = parse_file(fixture("hiring_original.dsl"));
  OmegaSequences a = OmegaSequences::draw(f, 1, 99);
  OmegaSequences b = a;
  EXPECT_EQ(interpret(f, a), interpret(f, b));
  OmegaSequences empty;
  EXPECT_THROW(interpret(f, empty), OmegaUnderflow);
}

TEST(Interpret, UninitializedReadsZero) {
  // Hand-built program (the parser would reject it) reading an unassigned variable.
  Program p;
  Stmt s;
  s.kind = Stmt::Kind::Assign;
  s.var = "t";
  s.expr = make_op(Expr::Op::Add, {make_var("x"), make_num(Rational(1))});
  p.body.push_back(s);
  OmegaSequences o;
  EXPECT_DOUBLE_EQ(interpret(p, o).at("t"), 1.0);
}

TEST(MonteCarlo, SumQueryProbability) {
  SourceFile f = parse_file(fixture("sum_query.dsl"));
  logic::Formula event = logic::ge(logic::LinearTerm::var("z"), logic::LinearTerm());
  Estimate e = monte_carlo(f, event, 1000000, 1);
  EXPECT_NEAR(e.estimate, 0.32736, 3 * e.halfwidth95 / 1.96);
  EXPECT_EQ(monte_carlo(f, logic::mk_true(), 100, 1).estimate, 1.0);
  Estimate none = monte_carlo(f, logic::mk_false(), 100, 1);
  EXPECT_EQ(none.estimate, 0.0);
  EXPECT_EQ(none.halfwidth95, 0.0);
  // Reproducible per seed.
  EXPECT_EQ(monte_carlo(f, event, 1000, 5).estimate, monte_carlo(f, event, 1000, 5).estimate);
}

TEST(MonteCarlo, GaussianMedian) {
  SourceFile f = parse_program("x ~ gauss(3, 2)\n");
  Estimate e = monte_carlo(f, logic::le(logic::LinearTerm::var("x"), logic::LinearTerm(Rational(3))), 100000, 2);
  EXPECT_NEAR(e.estimate, 0.5, 0.01);
}
