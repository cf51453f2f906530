#include <gtest/gtest.h>

#include <random>

#include "volfair/box.hpp"
#include "volfair/pvc.hpp"
#include "volfair/qe.hpp"
#include "volfair/smt.hpp"

using namespace volfair;
using namespace volfair::pvc;
using logic::LinearTerm;

namespace {

std::string fixture(const std::string& name) { return std::string(VOLFAIR_FIXTURE_DIR) + "/" + name; }

LinearTerm v(const char* name) { return LinearTerm::var(name); }
LinearTerm c(long k) { return LinearTerm(Rational(k)); }

std::function<Rational(const Var&)> lookup(const std::map<Var, Rational>& m) {
  return [&m](const Var& name) { return m.at(name); };
}

void collect_sites(const std::vector<lang::Stmt>& body, std::map<int, Var>& out) {
  for (const auto& s : body) {
    if (s.kind == lang::Stmt::Kind::ProbAssign) out[s.site] = s.var;
    collect_sites(s.then_body, out);
    collect_sites(s.else_body, out);
  }
}

/// SSA probabilistic variable for every sampling site of the composed program.
std::map<int, Var> site_vars(const lang::SourceFile& f, const Pvc& composed) {
  std::map<int, Var> out;
  collect_sites(lang::to_ssa(f.pop).body, out);
  if (f.dec) {
    std::map<int, Var> dec;
    collect_sites(lang::to_ssa(*f.dec).body, dec);
    // Decision-program variables may have been renamed apart.
    for (auto& [site, name] : dec) {
      Var renamed = name;
      if (!composed.densities.count(renamed)) renamed += "^i";
      out[site] = renamed;
    }
  }
  return out;
}

}  // namespace

TEST(Generate, HiringPopulationModel) {
  lang::SourceFile f = lang::parse_file(fixture("hiring_original.dsl"));
  Pvc p = generate_pvc(f.pop);
  EXPECT_EQ(p.prob_order, (std::vector<Var>{"ethnicity", "colRank", "yExp"}));
  EXPECT_EQ(p.det_vars, (std::set<Var>{"colRank_1"}));
  Formula expected = logic::mk_and(logic::mk_implies(logic::gt(v("ethnicity"), c(10)),
                                                     logic::eq(v("colRank_1"), v("colRank") + c(5))),
                                   logic::mk_implies(logic::le(v("ethnicity"), c(10)),
                                                     logic::eq(v("colRank_1"), v("colRank"))));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(-20, 40);
  for (int i = 0; i < 400; ++i) {
    std::map<Var, Rational> m{{"ethnicity", pick(rng)}, {"colRank", pick(rng)}, {"colRank_1", pick(rng)},
                              {"yExp", pick(rng)}};
    ASSERT_EQ(logic::evaluate(p.phi(), lookup(m)), logic::evaluate(expected, lookup(m)));
  }
  ASSERT_TRUE(p.sensitive);
  EXPECT_EQ(logic::to_string(*p.sensitive), logic::to_string(logic::gt(v("ethnicity"), c(10))));
}

TEST(Generate, SumQueryIsASingleEquality) {
  Pvc p = generate_pvc(lang::parse_file(fixture("sum_query.dsl")).pop);
  ASSERT_EQ(p.constraints.size(), 1u);
  EXPECT_EQ(logic::to_string(p.phi()), logic::to_string(logic::eq(v("z"), v("x") + v("y"))));
  EXPECT_EQ(p.densities.size(), 2u);
  EXPECT_EQ(p.det_vars, (std::set<Var>{"z"}));
}

TEST(Generate, SampleOnlyProgramIsTrue) {
  Pvc p = generate_pvc(lang::parse_program("x ~ gauss(0, 1)\n").pop);
  EXPECT_TRUE(p.phi().is_true());
  EXPECT_EQ(p.densities.size(), 1u);
  EXPECT_TRUE(p.det_vars.empty());
}

TEST(Generate, NoQuantifiers) {
  for (const char* name : {"hiring_original.dsl", "svm_independent.dsl", "svm_bayesnet.dsl"}) {
    Pvc p = compose_file(lang::parse_file(fixture(name)));
    EXPECT_TRUE(logic::is_quantifier_free(p.phi())) << name;
  }
}

TEST(Generate, NonlinearRejectedWithLocation) {
  auto f = lang::parse_program("x ~ gauss(0, 1)\ny ~ gauss(0, 1)\nz = x * y\n");
  try {
    generate_pvc(f.pop);
    FAIL() << "expected NonlinearError";
  } catch (const NonlinearError& e) {
    EXPECT_EQ(e.loc().line, 3);
  }
  auto g = lang::parse_program("x ~ gauss(0, 1)\nif x / x > 1:\n    y = 1\nelse:\n    y = 2\n");
  EXPECT_THROW(generate_pvc(g.pop), NonlinearError);
  // Constant factors on either side are fine.
  auto ok = lang::parse_program("x ~ gauss(0, 1)\nz = (2 + 1) * x - x / 4\n");
  EXPECT_EQ(logic::to_string(generate_pvc(ok.pop).phi()),
            logic::to_string(logic::eq(v("z"), LinearTerm::var("x", Rational(11, 4)))));
}

TEST(Generate, BooleanVariablesAreInlined) {
  lang::SourceFile f = lang::parse_file(fixture("hiring_original.dsl"));
  Pvc dec = generate_pvc(*f.dec);
  ASSERT_TRUE(dec.target);
  std::set<Var> fv = logic::free_vars(*dec.target);
  for (const auto& name : fv) EXPECT_EQ(dec.bool_defs.count(name), 0u) << name;
  // hire ⇔ colRank ≤ 5 ∨ yExp − colRank > −5
  Formula expected = logic::mk_or(logic::le(v("colRank"), c(5)), logic::gt(v("yExp") - v("colRank"), c(-5)));
  for (int a = -10; a <= 20; ++a) {
    for (int b = -10; b <= 20; ++b) {
      std::map<Var, Rational> m{{"colRank", a}, {"yExp", b}, {"expRank", b - a}};
      ASSERT_EQ(logic::evaluate(*dec.target, lookup(m)), logic::evaluate(expected, lookup(m)));
    }
  }
}

TEST(Compose, HiringLinksRenamedInputs) {
  Pvc p = compose_file(lang::parse_file(fixture("hiring_original.dsl")));
  std::string text = logic::to_string(p.phi());
  EXPECT_NE(text.find(logic::to_string(logic::eq(v("yExp^i"), v("yExp")))), std::string::npos) << text;
  EXPECT_NE(text.find(logic::to_string(logic::eq(v("colRank^i"), v("colRank_1")))), std::string::npos) << text;
  EXPECT_TRUE(p.det_vars.count("colRank^i"));
  EXPECT_EQ(p.densities.size(), 3u);
  EXPECT_TRUE(p.sensitive && p.target);
}

TEST(Compose, NoInputsIsPlainConjunction) {
  Pvc pre = generate_pvc(lang::parse_program("x ~ gauss(0, 1)\nu = x + 1\n").pop);
  Pvc dec = generate_pvc(lang::parse_program("w ~ gauss(0, 1)\nk = 2 * w\n").pop);
  Pvc both = compose(pre, dec, {}, {});
  EXPECT_EQ(both.constraints.size(), 2u);
  EXPECT_EQ(both.det_vars, (std::set<Var>{"u", "k"}));
}

TEST(Compose, Errors) {
  Pvc pre = generate_pvc(lang::parse_program("x ~ gauss(0, 1)\n").pop);
  Pvc dec = generate_pvc(lang::parse_program("x ~ gauss(0, 1)\n").pop);
  EXPECT_THROW(compose(pre, dec, {}, {}), std::invalid_argument);
  EXPECT_THROW(compose(pre, rename_apart(dec, pre.vars()), {"x"}, {}), std::invalid_argument);
  auto bad = lang::parse_program(
      "def popModel():\n    a ~ gauss(0, 1)\n    return a\n"
      "def F(p, q):\n    r = p + q\n    fairnessTarget(r > 0)\n    return r\n");
  EXPECT_THROW(compose_file(bad), std::invalid_argument);
}

TEST(Event, SumQueryProjectsToHalfPlane) {
  Pvc p = generate_pvc(lang::parse_file(fixture("sum_query.dsl")).pop);
  Formula ev = event_formula(p, logic::ge(v("z"), c(0)));
  EXPECT_EQ(ev.kind(), logic::Kind::Exists);
  EXPECT_EQ(logic::free_vars(ev), (std::set<Var>{"x", "y"}));
  Formula qf = logic::eliminate_quantifiers(ev, logic::kDefaultDnfCap);
  EXPECT_EQ(logic::to_string(qf), logic::to_string(logic::ge(v("x") + v("y"), c(0))));

  Formula none = logic::eliminate_quantifiers(event_formula(p, logic::mk_false()), logic::kDefaultDnfCap);
  EXPECT_TRUE(none.is_false());

  Pvc plain = generate_pvc(lang::parse_program("x ~ gauss(0, 1)\n").pop);
  Formula direct = event_formula(plain, logic::ge(v("x"), c(1)));
  EXPECT_EQ(direct.kind(), logic::Kind::Atom);
}

TEST(Event, SlicingDropsIrrelevantConstraints) {
  Pvc p = compose_file(lang::parse_file(fixture("hiring_original.dsl")));
  Region s = event_region(p, *p.sensitive);
  EXPECT_TRUE(s.frame.is_true());
  EXPECT_TRUE(s.hidden.empty());
  EXPECT_EQ(s.dims, (std::vector<Var>{"ethnicity"}));

  Region t = event_region(p, *p.target);
  EXPECT_EQ(t.dims, (std::vector<Var>{"ethnicity", "colRank", "yExp"}));
  Region full = event_region(p, *p.target, false);
  EXPECT_EQ(full.hidden.size(), p.det_vars.size());
}

TEST(Event, FinalStateUsesLatestVersions) {
  Pvc p = generate_pvc(lang::parse_file(fixture("hiring_original.dsl")).pop);
  Formula f = final_state(p, logic::gt(v("colRank"), c(0)));
  EXPECT_EQ(logic::free_vars(f), (std::set<Var>{"colRank_1"}));
}

TEST(Dump, SmtlibListsDensitiesAndAssertions) {
  Pvc p = generate_pvc(lang::parse_file(fixture("sum_query.dsl")).pop);
  std::string text = dump_smtlib(p);
  EXPECT_NE(text.find("(declare-const z Real)"), std::string::npos);
  EXPECT_NE(text.find("(assert "), std::string::npos);
  EXPECT_NE(text.find("; x ~ "), std::string::npos);
}

// Each valuation of the sampled variables extends to exactly the values the
// interpreter computes.
TEST(Correspondence, SolverModelsMatchExecutions) {
  for (const char* name : {"hiring_original.dsl", "svm_bayesnet.dsl"}) {
    lang::SourceFile f = lang::parse_file(fixture(name));
    Pvc p = compose_file(f);
    std::map<int, Var> sites = site_vars(f, p);
    std::vector<Var> wanted(p.det_vars.begin(), p.det_vars.end());
    std::mt19937_64 rng(11);
    smt::Session session({smt::default_solver_path()});
    session.add(p.phi());
    for (int run = 0; run < 100; ++run) {
      lang::OmegaSequences omega;
      omega.queues.resize(f.site_count);
      std::vector<Formula> fix;
      std::map<Var, Rational> sampled;
      for (const auto& [site, var] : sites) {
        Rational x = from_double(dist::sample(p.densities.at(var), rng));
        omega.queues[site].push_back(to_double(x));
        sampled[var] = x;
        fix.push_back(logic::eq(LinearTerm::var(var), LinearTerm(x)));
      }
      lang::State state = lang::interpret(f, omega);
      smt::Answer a = session.check_and_model(logic::mk_and(fix), wanted);
      ASSERT_EQ(a.result, smt::Result::Sat) << name;
      std::map<Var, Rational> model = a.model;
      model.insert(sampled.begin(), sampled.end());
      for (const auto& [source, ssa] : p.final_names) {
        auto it = state.find(source);
        if (it == state.end() || !model.count(ssa) || p.bool_defs.count(ssa)) continue;
        EXPECT_NEAR(to_double(model.at(ssa)), it->second, 1e-9 * (1 + std::abs(it->second)))
            << name << " " << source;
      }
      ASSERT_TRUE(p.target);
      bool expected = lang::eval_bool(*(f.dec ? f.dec : std::optional<lang::Program>(f.pop))->markers.target, state);
      auto value = [&](const Var& x) {
        auto m = model.find(x);
        return m == model.end() ? Rational(0) : m->second;
      };
      EXPECT_EQ(logic::evaluate(*p.target, value), expected) << name;
    }
  }
}

TEST(Correspondence, MonteCarloAgreesWithProjectedEvent) {
  for (const char* name : {"hiring_original.dsl", "svm_independent.dsl"}) {
    lang::SourceFile f = lang::parse_file(fixture(name));
    Pvc p = compose_file(f);
    Formula event = logic::eliminate_quantifiers(event_formula(p, *p.target), logic::kDefaultDnfCap);
    lang::CompiledFormula compiled(event);
    const std::size_t n = 1000000;
    std::mt19937_64 rng(5);
    std::size_t hits = 0;
    lang::State s;
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& var : p.prob_order) s[var] = dist::sample(p.densities.at(var), rng);
      if (compiled(s)) ++hits;
    }
    double projected = static_cast<double>(hits) / n;
    lang::Estimate mc =
        lang::monte_carlo(f, [&](const lang::State& st) { return lang::eval_bool(*f.dec->markers.target, st); }, n, 17);
    double sigma = std::sqrt(projected * (1 - projected) / n + mc.estimate * (1 - mc.estimate) / n);
    EXPECT_NEAR(projected, mc.estimate, 3 * sigma) << name;
  }
}
