#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "volfair/box.hpp"
#include "volfair/rational.hpp"

namespace volfair::dist {

using logic::Var;

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Piecewise-constant density on [lo, hi).
struct Segment {
  Rational lo;
  Rational hi;
  Rational height;
  double mass() const { return to_double(height * (hi - lo)); }
};

struct Step {
  /// Sorted, disjoint, positive heights, total mass 1.
  std::vector<Segment> segments;
};

using Distribution = std::variant<Gaussian, Step>;
using DensityMap = std::map<Var, Distribution>;

/// Validates and sorts segments. Heights are rescaled to unit mass when
/// `normalize` is set; `was_rescaled` reports whether that changed anything.
Step make_step(std::vector<Segment> segments, bool normalize = true, bool* was_rescaled = nullptr);

double pdf(const Distribution& d, double x);
double cdf(const Distribution& d, double x);
/// 1 - cdf, computed without cancellation in the upper tail.
double sf(const Distribution& d, double x);
double cdf(const Distribution& d, const logic::ExtValue& x);
double quantile(const Distribution& d, double p);
double mean(const Distribution& d);
double stddev(const Distribution& d);
std::string describe(const Distribution& d);

/// Mass of [lo, hi].
double interval_mass(const Distribution& d, const logic::ExtValue& lo, const logic::ExtValue& hi);

double rect_volume(const logic::Hyperrectangle& box, const DensityMap& densities);

template <class Rng>
double sample(const Distribution& d, Rng& rng) {
  if (const auto* g = std::get_if<Gaussian>(&d)) {
    std::normal_distribution<double> n(g->mean, g->stddev);
    return n(rng);
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return quantile(d, u(rng));
}

enum class AdfKind { None, Uniform, NStep };
enum class AdfSpan { ThreeSigma, ThreeVariance };

AdfKind parse_adf_kind(const std::string& name);
std::string to_string(AdfKind kind);

/// Piecewise-constant guide density. Segments are disjoint and sorted.
struct Adf {
  std::vector<Segment> segments;
  double area(double lo, double hi) const;
};

/// Guide density for one distribution; nullopt for AdfKind::None.
std::optional<Adf> make_adf(const Distribution& d, AdfKind kind, int steps = 5,
                            AdfSpan span = AdfSpan::ThreeSigma);

struct AreaEncoding {
  logic::Formula formula;
  /// Per-segment overlap variables; to be declared alongside δ, l, u.
  std::vector<Var> aux;
};

/// δ = Σ c_i · max(min(b_i, u) − max(a_i, l), 0), expanded into case splits
/// over one auxiliary overlap variable per segment. Assumes l ≤ u.
AreaEncoding adf_area_encoding(const Adf& adf, const Var& delta, const Var& lower, const Var& upper,
                               const std::string& aux_prefix);

}  // namespace volfair::dist
