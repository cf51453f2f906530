#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "volfair/dist.hpp"

using namespace volfair;
using namespace volfair::dist;
using logic::ExtValue;
using logic::Hyperrectangle;
using logic::Interval;

namespace {

// Standard normal CDF, 40-digit reference values at x = -5, -4.5, ..., 5.
const double kPhiTable[21][2] = {
    {-5.0, 0.0000002866515718791939116737523}, {-4.5, 0.000003397673124730060401687449},
    {-4.0, 0.00003167124183311992125377076},   {-3.5, 0.0002326290790355250363499259},
    {-3.0, 0.001349898031630094526651815},     {-2.5, 0.006209665325776135166978105},
    {-2.0, 0.02275013194817920720028264},      {-1.5, 0.06680720126885806600449404},
    {-1.0, 0.1586552539314570514147675},       {-0.5, 0.3085375387259868963622954},
    {0.0, 0.5},                                {0.5, 0.6914624612740131036377046},
    {1.0, 0.8413447460685429485852325},        {1.5, 0.933192798731141933995506},
    {2.0, 0.9772498680518207927997174},        {2.5, 0.9937903346742238648330219},
    {3.0, 0.9986501019683699054733482},        {3.5, 0.9997673709209644749636501},
    {4.0, 0.9999683287581668800787462},        {4.5, 0.9999966023268752699395983},
    {5.0, 0.9999997133484281208060883},
};
constexpr double kOneSigmaMass = 0.68268949213708589717;

Distribution sex_step() {
  return make_step({{Rational(0), Rational(1), parse_rational("0.3307")},
                    {Rational(1), Rational(2), parse_rational("0.6693")}});
}

Hyperrectangle box1(double lo, double hi) {
  return Hyperrectangle({"x"}, {Interval{ExtValue::finite(from_double(lo)), ExtValue::finite(from_double(hi))}});
}

}  // namespace

TEST(GaussianCdf, MatchesOracleTable) {
  Distribution g = Gaussian{0.0, 1.0};
  for (const auto& row : kPhiTable) EXPECT_NEAR(cdf(g, row[0]), row[1], 1e-12) << "x = " << row[0];
}

TEST(GaussianCdf, SymmetryAndLimits) {
  Distribution g = Gaussian{0.0, 1.0};
  EXPECT_DOUBLE_EQ(cdf(g, 0.0), 0.5);
  EXPECT_NEAR(cdf(g, 1.0) - cdf(g, -1.0), kOneSigmaMass, 1e-9);
  EXPECT_EQ(cdf(g, ExtValue::pos_inf()), 1.0);
  EXPECT_EQ(cdf(g, ExtValue::neg_inf()), 0.0);
  Distribution shifted = Gaussian{10.0, 5.0};
  EXPECT_NEAR(cdf(shifted, 15.0), kPhiTable[12][1], 1e-12);
}

TEST(GaussianCdf, UpperTailKeepsRelativePrecision) {
  Distribution g = Gaussian{0.0, 1.0};
  double m = interval_mass(g, ExtValue::finite(8), ExtValue::pos_inf());
  EXPECT_NEAR(m / 6.220960574271784e-16, 1.0, 1e-9);
}

TEST(StepDist, CdfAndMass) {
  Distribution s = sex_step();
  EXPECT_NEAR(cdf(s, 1.0), 0.3307, 1e-12);
  EXPECT_NEAR(cdf(s, 0.5), 0.16535, 1e-12);
  EXPECT_EQ(cdf(s, -1.0), 0.0);
  EXPECT_EQ(cdf(s, 3.0), 1.0);
  double total = 0;
  for (const auto& seg : std::get<Step>(s).segments) total += seg.mass();
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(StepDist, NormalizationAndValidation) {
  bool rescaled = false;
  Step s = make_step({{Rational(0), Rational(1), Rational(2)}, {Rational(1), Rational(2), Rational(2)}}, true, &rescaled);
  EXPECT_TRUE(rescaled);
  EXPECT_EQ(s.segments[0].height, Rational(1, 2));
  EXPECT_THROW(make_step({{Rational(1), Rational(0), Rational(1)}}), std::invalid_argument);
  EXPECT_THROW(make_step({{Rational(0), Rational(1), Rational(0)}}), std::invalid_argument);
  EXPECT_THROW(make_step({{Rational(0), Rational(2), Rational(1)}, {Rational(1), Rational(3), Rational(1)}}),
               std::invalid_argument);
}

TEST(Distributions, MonotoneCdfAndNonnegativePdf) {
  for (const Distribution& d : {Distribution{Gaussian{3.0, 2.0}}, sex_step()}) {
    double prev = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      double x = -10.0 + 0.02 * i;
      double c = cdf(d, x);
      EXPECT_GE(c, prev);
      EXPECT_GE(pdf(d, x), 0.0);
      prev = c;
    }
  }
}

TEST(Distributions, QuantileInvertsCdf) {
  for (const Distribution& d : {Distribution{Gaussian{-1.0, 0.5}}, sex_step()}) {
    for (double p : {0.001, 0.1, 0.3307, 0.5, 0.9, 0.999}) EXPECT_NEAR(cdf(d, quantile(d, p)), p, 1e-9);
  }
}

TEST(RectVolume, TotalDegenerateAndProduct) {
  DensityMap dm{{"x", Gaussian{0, 1}}, {"y", sex_step()}};
  EXPECT_DOUBLE_EQ(rect_volume(Hyperrectangle::unbounded({"x", "y"}), dm), 1.0);
  Hyperrectangle flat({"x", "y"}, {Interval{ExtValue::finite(1), ExtValue::finite(1)}, Interval{}});
  EXPECT_EQ(rect_volume(flat, dm), 0.0);
  EXPECT_NEAR(rect_volume(box1(-1, 1), dm), kOneSigmaMass, 1e-9);
  Hyperrectangle prod({"x", "y"}, {Interval{ExtValue::finite(-1), ExtValue::finite(1)},
                                   Interval{ExtValue::finite(0), ExtValue::finite(1)}});
  EXPECT_NEAR(rect_volume(prod, dm), kOneSigmaMass * 0.3307, 1e-12);
}

TEST(Adf, KindsAndShapes) {
  Distribution g = Gaussian{0.0, 2.0};
  EXPECT_FALSE(make_adf(g, AdfKind::None).has_value());
  auto uni = make_adf(g, AdfKind::Uniform);
  ASSERT_TRUE(uni);
  ASSERT_EQ(uni->segments.size(), 1u);
  EXPECT_EQ(uni->segments[0].lo, -6);
  EXPECT_EQ(uni->segments[0].hi, 6);
  auto five = make_adf(g, AdfKind::NStep, 5);
  ASSERT_TRUE(five);
  ASSERT_EQ(five->segments.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    if (i != 2) EXPECT_GT(five->segments[2].height, five->segments[i].height);
  }
  // Heights carry exact segment mass, so the ADF integrates to the mass of the span.
  EXPECT_NEAR(five->area(-6, 6), cdf(g, 6.0) - cdf(g, -6.0), 1e-9);
  auto literal = make_adf(Distribution{Gaussian{1.0, 2.0}}, AdfKind::Uniform, 5, AdfSpan::ThreeVariance);
  EXPECT_EQ(literal->segments[0].lo, -11);

  Distribution s = sex_step();
  for (AdfKind k : {AdfKind::Uniform, AdfKind::NStep}) {
    auto a = make_adf(s, k);
    ASSERT_EQ(a->segments.size(), 2u);
    EXPECT_EQ(a->segments[0].height, parse_rational("0.3307"));
  }
}

TEST(Adf, ParseKind) {
  EXPECT_EQ(parse_adf_kind("nstep"), AdfKind::NStep);
  EXPECT_THROW(parse_adf_kind("bogus"), std::invalid_argument);
}

namespace {

// Evaluates the encoding at (l, u, δ) with the overlap variables set to the intended values.
bool encoding_holds(const Adf& adf, const AreaEncoding& enc, const Rational& l, const Rational& u, const Rational& d) {
  std::map<logic::Var, Rational> m{{"d", d}, {"l", l}, {"u", u}};
  for (std::size_t i = 0; i < adf.segments.size(); ++i) {
    const Segment& s = adf.segments[i];
    Rational hi = u < s.hi ? u : s.hi;
    Rational lo = l > s.lo ? l : s.lo;
    m[enc.aux[i]] = hi > lo ? Rational(hi - lo) : Rational(0);
  }
  return logic::evaluate(enc.formula, [&](const logic::Var& v) { return m.at(v); });
}

}  // namespace

TEST(AreaEncoding, SingleSegment) {
  Adf adf{{Segment{Rational(0), Rational(10), Rational(1, 10)}}};
  AreaEncoding enc = adf_area_encoding(adf, "d", "l", "u", "s");
  EXPECT_TRUE(encoding_holds(adf, enc, Rational(2), Rational(5), Rational(3, 10)));
  EXPECT_FALSE(encoding_holds(adf, enc, Rational(2), Rational(5), Rational(1, 10)));
  EXPECT_TRUE(encoding_holds(adf, enc, Rational(20), Rational(25), Rational(0)));
}

TEST(AreaEncoding, MatchesNumericIntegralOnRandomIntervals) {
  auto adf = *make_adf(Distribution{Gaussian{0.0, 1.0}}, AdfKind::NStep, 5);
  AreaEncoding enc = adf_area_encoding(adf, "d", "l", "u", "s");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pick(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    double a = pick(rng), b = pick(rng);
    if (a > b) std::swap(a, b);
    Rational l = from_double(a), u = from_double(b);
    // Midpoint rule over the breakpoints of the step function: exact for piecewise-constant integrands.
    std::vector<double> cuts{a, b};
    for (const auto& s : adf.segments) {
      for (double c : {to_double(s.lo), to_double(s.hi)}) {
        if (a < c && c < b) cuts.push_back(c);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    double numeric = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      for (const auto& s : adf.segments) {
        if (to_double(s.lo) <= mid && mid < to_double(s.hi)) numeric += to_double(s.height) * (cuts[k + 1] - cuts[k]);
      }
    }
    Rational exact = 0;
    for (const auto& s : adf.segments) {
      Rational hi = u < s.hi ? u : s.hi;
      Rational lo = l > s.lo ? l : s.lo;
      if (hi > lo) exact += s.height * (hi - lo);
    }
    EXPECT_NEAR(to_double(exact), numeric, 1e-9);
    EXPECT_TRUE(encoding_holds(adf, enc, l, u, exact));
  }
}

TEST(Sampling, GaussianMedianMatchesCdf) {
  Distribution g = Gaussian{3.0, 2.0};
  std::mt19937_64 rng(5);
  int below = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) below += sample(g, rng) <= 3.0;
  EXPECT_NEAR(static_cast<double>(below) / n, cdf(g, 3.0), 0.01);
}
