#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "volfair/lang.hpp"
#include "volfair/pvc.hpp"
#include "volfair/volume.hpp"

namespace volfair::fairness {

using logic::Formula;
using volume::BoundPair;

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct FairnessProblem {
  pvc::Pvc composed;
  /// Minority group; absent for a plain probability query.
  std::optional<Formula> sensitive;
  /// Qualification; true when the program does not mark one.
  Formula qualified = logic::mk_true();
  Formula target;
  double epsilon = 0.15;

  static FairnessProblem from_file(const lang::SourceFile& file, double epsilon);
  bool probability_only() const { return !sensitive.has_value(); }
};

struct Quantity {
  std::string name;
  pvc::Region region;
};

/// Pr[F∧S∧Q], Pr[F∧¬S∧Q], Pr[¬S∧Q], Pr[S∧Q] in that order (n1, d1, n2, d2).
/// A probability-only problem yields the single quantity Pr[F].
std::vector<Quantity> build_quantities(const FairnessProblem& p);

struct RatioBounds {
  double lo = 0.0;
  double hi = kInfinity;
};

/// Bounds on Pr[F | S∧Q] / Pr[F | ¬S∧Q] from the four joint probabilities.
RatioBounds ratio_bounds(const BoundPair& n1, const BoundPair& d1, const BoundPair& n2, const BoundPair& d2);

// ---------------------------------------------------------------------------
// Probabilistic postconditions

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class Truth { True, False, Unknown };
std::string to_string(Truth t);

struct PExp;
using PExpPtr = std::shared_ptr<const PExp>;

struct PExp {
  enum class Op { Prob, Const, Add, Sub, Mul, Div, Lt, Le, Gt, Ge, And, Or, Not };
  Op op = Op::Const;
  std::string event;  // Prob
  double value = 0;   // Const
  std::vector<PExpPtr> args;
};

PExpPtr prob(const std::string& event);
PExpPtr constant(double v);
PExpPtr apply(PExp::Op op, std::vector<PExpPtr> args);
/// Pr[a | b] as Pr[a∧b] / Pr[b]; callers name the joint event.
PExpPtr conditional(const std::string& joint, const std::string& given);

/// The group-fairness condition over the quantity names of build_quantities.
PExpPtr group_fairness(double epsilon);

Range eval_range(const PExp& e, const std::map<std::string, BoundPair>& bounds);
Truth eval_pexp(const PExp& e, const std::map<std::string, BoundPair>& bounds);

// ---------------------------------------------------------------------------
// Driver

enum class Outcome { Fair, Unfair, Unknown };
std::string to_string(Outcome o);

struct TraceRecord {
  std::size_t round = 0;
  std::vector<std::pair<std::string, BoundPair>> quantities;
  RatioBounds ratio;
  std::size_t queries = 0;
  double elapsed = 0.0;
};

struct VerifyConfig {
  volume::SamplerConfig sampler;
  std::size_t max_rounds = std::numeric_limits<std::size_t>::max();
  double timeout_secs = 900;
  /// Probability-only problems stop once upper − lower is at most this.
  double target_width = 0.01;
  /// Steps the samplers of one round concurrently.
  bool parallel = true;
  std::function<void(const TraceRecord&)> on_round;
};

struct Verdict {
  Outcome outcome = Outcome::Unknown;
  RatioBounds ratio;
  /// Bounds of each quantity when the run stopped.
  std::vector<std::pair<std::string, BoundPair>> quantities;
  std::size_t rounds = 0;
  std::size_t queries = 0;
  double elapsed = 0.0;
  /// Why the run ended without a verdict, if it did.
  std::string note;
};

Verdict fair_verify(const FairnessProblem& p, const VerifyConfig& cfg, const smt::SolverConfig& solver);

}  // namespace volfair::fairness
