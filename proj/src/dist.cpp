#include "volfair/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace volfair::dist {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gaussian_cdf(const Gaussian& g, double x) {
  return 0.5 * std::erfc(-(x - g.mean) / g.stddev * kInvSqrt2);
}

double gaussian_sf(const Gaussian& g, double x) {
  return 0.5 * std::erfc((x - g.mean) / g.stddev * kInvSqrt2);
}

double step_cdf(const Step& s, double x) {
  if (x >= to_double(s.segments.back().hi)) return 1.0;
  double acc = 0.0;
  for (const auto& seg : s.segments) {
    double lo = to_double(seg.lo);
    double hi = to_double(seg.hi);
    if (x <= lo) break;
    double h = to_double(seg.height);
    acc += h * (std::min(x, hi) - lo);
  }
  return std::clamp(acc, 0.0, 1.0);
}

// Acklam's rational approximation refined by one Halley step.
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  if (p <= 0.0) return -INFINITY;
  if (p >= 1.0) return INFINITY;
  double x;
  if (p < 0.02425) {
    double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p > 1 - 0.02425) {
    double q = std::sqrt(-2 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  }
  double e = 0.5 * std::erfc(-x * kInvSqrt2) - p;
  double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  return x - u / (1 + x * u / 2);
}

}  // namespace

Step make_step(std::vector<Segment> segments, bool normalize, bool* was_rescaled) {
  if (segments.empty()) throw std::invalid_argument("step distribution needs at least one segment");
  std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
  Rational total = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (!(s.lo < s.hi)) throw std::invalid_argument("step segment needs lo < hi");
    if (s.height <= 0) throw std::invalid_argument("step segment needs a positive weight");
    if (i > 0 && segments[i - 1].hi > s.lo) throw std::invalid_argument("step segments overlap");
    total += s.height * (s.hi - s.lo);
  }
  if (was_rescaled) *was_rescaled = total != 1;
  if (normalize && total != 1) {
    for (auto& s : segments) s.height /= total;
  }
  return Step{std::move(segments)};
}

double pdf(const Distribution& d, double x) {
  if (const auto* g = std::get_if<Gaussian>(&d)) {
    double z = (x - g->mean) / g->stddev;
    return kInvSqrt2Pi / g->stddev * std::exp(-0.5 * z * z);
  }
  for (const auto& seg : std::get<Step>(d).segments) {
    if (to_double(seg.lo) <= x && x < to_double(seg.hi)) return to_double(seg.height);
  }
  return 0.0;
}

double cdf(const Distribution& d, double x) {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  if (const auto* g = std::get_if<Gaussian>(&d)) return gaussian_cdf(*g, x);
  return step_cdf(std::get<Step>(d), x);
}

double sf(const Distribution& d, double x) {
  if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
  if (const auto* g = std::get_if<Gaussian>(&d)) return gaussian_sf(*g, x);
  return 1.0 - step_cdf(std::get<Step>(d), x);
}

double cdf(const Distribution& d, const logic::ExtValue& x) { return cdf(d, x.to_double()); }

double quantile(const Distribution& d, double p) {
  if (const auto* g = std::get_if<Gaussian>(&d)) return g->mean + g->stddev * normal_quantile(p);
  const Step& s = std::get<Step>(d);
  double acc = 0.0;
  for (const auto& seg : s.segments) {
    double m = seg.mass();
    if (p <= acc + m) return to_double(seg.lo) + (p - acc) / to_double(seg.height);
    acc += m;
  }
  return to_double(s.segments.back().hi);
}

double mean(const Distribution& d) {
  if (const auto* g = std::get_if<Gaussian>(&d)) return g->mean;
  double m = 0.0;
  for (const auto& seg : std::get<Step>(d).segments) m += seg.mass() * to_double((seg.lo + seg.hi) / 2);
  return m;
}

double stddev(const Distribution& d) {
  if (const auto* g = std::get_if<Gaussian>(&d)) return g->stddev;
  double mu = mean(d);
  double second = 0.0;
  for (const auto& seg : std::get<Step>(d).segments) {
    double a = to_double(seg.lo), b = to_double(seg.hi);
    second += to_double(seg.height) * (b * b * b - a * a * a) / 3.0;
  }
  return std::sqrt(std::max(0.0, second - mu * mu));
}

std::string describe(const Distribution& d) {
  std::ostringstream out;
  if (const auto* g = std::get_if<Gaussian>(&d)) {
    out << "gauss(" << g->mean << ", " << g->stddev << ")";
    return out.str();
  }
  out << "step([";
  bool first = true;
  for (const auto& seg : std::get<Step>(d).segments) {
    if (!first) out << ", ";
    first = false;
    out << "(" << volfair::to_string(seg.lo) << ", " << volfair::to_string(seg.hi) << ", " << volfair::to_string(seg.height) << ")";
  }
  out << "])";
  return out.str();
}

double interval_mass(const Distribution& d, const logic::ExtValue& lo, const logic::ExtValue& hi) {
  if (!(lo < hi)) return 0.0;
  double a = lo.to_double();
  double b = hi.to_double();
  // Difference of upper-tail probabilities keeps precision above the median.
  double m = a > mean(d) ? sf(d, a) - sf(d, b) : cdf(d, b) - cdf(d, a);
  return std::clamp(m, 0.0, 1.0);
}

double rect_volume(const logic::Hyperrectangle& box, const DensityMap& densities) {
  double v = 1.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    auto it = densities.find(box.dims()[i]);
    if (it == densities.end()) throw std::out_of_range("no density for " + box.dims()[i]);
    v *= interval_mass(it->second, box.bound(i).lo, box.bound(i).hi);
    if (v == 0.0) break;
  }
  return v;
}

AdfKind parse_adf_kind(const std::string& name) {
  if (name == "none") return AdfKind::None;
  if (name == "uniform") return AdfKind::Uniform;
  if (name == "nstep" || name == "step") return AdfKind::NStep;
  throw std::invalid_argument("unknown ADF kind '" + name + "' (expected none, uniform or nstep)");
}

std::string to_string(AdfKind kind) {
  switch (kind) {
    case AdfKind::None: return "none";
    case AdfKind::Uniform: return "uniform";
    case AdfKind::NStep: return "nstep";
  }
  return "?";
}

double Adf::area(double lo, double hi) const {
  double a = 0.0;
  for (const auto& seg : segments) {
    double overlap = std::min(hi, to_double(seg.hi)) - std::max(lo, to_double(seg.lo));
    if (overlap > 0) a += to_double(seg.height) * overlap;
  }
  return a;
}

std::optional<Adf> make_adf(const Distribution& d, AdfKind kind, int steps, AdfSpan span) {
  if (kind == AdfKind::None) return std::nullopt;
  if (const auto* s = std::get_if<Step>(&d)) return Adf{s->segments};
  if (kind == AdfKind::NStep && steps < 1) throw std::invalid_argument("ADF step count must be positive");

  const auto& g = std::get<Gaussian>(d);
  double radius = span == AdfSpan::ThreeSigma ? 3.0 * g.stddev : 3.0 * g.stddev * g.stddev;
  // Rounded to a short decimal so that solver constants stay small.
  auto snap = [](double v) {
    double scale = std::pow(10.0, 6 - std::ceil(std::log10(std::max(std::abs(v), 1e-6))));
    return Rational(from_double(std::round(v * scale) / scale));
  };
  Rational lo = snap(g.mean - radius);
  Rational hi = snap(g.mean + radius);
  int n = kind == AdfKind::Uniform ? 1 : steps;
  Rational width = (hi - lo) / n;
  Adf adf;
  for (int i = 0; i < n; ++i) {
    Rational a = lo + width * i;
    Rational b = i + 1 == n ? hi : lo + width * (i + 1);
    double mass = interval_mass(d, logic::ExtValue::finite(a), logic::ExtValue::finite(b));
    Rational height = from_double(mass / to_double(b - a));
    if (height <= 0) continue;
    adf.segments.push_back(Segment{a, b, height});
  }
  return adf;
}

AreaEncoding adf_area_encoding(const Adf& adf, const Var& delta, const Var& lower, const Var& upper,
                               const std::string& aux_prefix) {
  using namespace logic;
  LinearTerm l = LinearTerm::var(lower);
  LinearTerm u = LinearTerm::var(upper);
  AreaEncoding enc;
  std::vector<Formula> parts;
  LinearTerm sum;
  for (std::size_t i = 0; i < adf.segments.size(); ++i) {
    const Segment& seg = adf.segments[i];
    Var sv = aux_prefix + std::to_string(i);
    enc.aux.push_back(sv);
    LinearTerm s = LinearTerm::var(sv);
    LinearTerm a(seg.lo);
    LinearTerm b(seg.hi);
    // No overlap, or one of the four min/max combinations.
    parts.push_back(mk_or({
        mk_and(le(u, a), eq(s, LinearTerm())),
        mk_and(ge(l, b), eq(s, LinearTerm())),
        mk_and({gt(u, a), lt(l, b), le(u, b), le(a, l), eq(s, u - l)}),
        mk_and({gt(u, a), lt(l, b), le(u, b), lt(l, a), eq(s, u - a)}),
        mk_and({gt(u, a), lt(l, b), gt(u, b), le(a, l), eq(s, b - l)}),
        mk_and({gt(u, a), lt(l, b), gt(u, b), lt(l, a), eq(s, b - a)}),
    }));
    sum = sum + s * seg.height;
  }
  parts.push_back(eq(LinearTerm::var(delta), sum));
  enc.formula = mk_and(std::move(parts));
  return enc;
}

}  // namespace volfair::dist
