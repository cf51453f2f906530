#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "volfair/box.hpp"
#include "volfair/dist.hpp"
#include "volfair/pvc.hpp"
#include "volfair/smt.hpp"

namespace volfair::volume {

using logic::Formula;
using logic::Hyperrectangle;
using logic::Var;

struct SamplerConfig {
  dist::AdfKind adf = dist::AdfKind::None;
  int adf_steps = 5;
  dist::AdfSpan adf_span = dist::AdfSpan::ThreeSigma;
  /// Multiplier applied to lb when no box meets the current threshold.
  double decay = 0.5;
  /// Below this threshold the ADF guard is dropped and sampling is unguided.
  double adf_floor = 1e-6;
  bool maximize = true;
  int maximize_passes = 4;
  std::size_t dnf_cap = logic::kDefaultDnfCap;
  /// Per-sample validity and disjointness checks against a second solver.
  bool check_soundness = false;
};

enum class StepKind { Progress, NeedDecay, Exhausted, Unknown };
std::string to_string(StepKind k);

struct StepResult {
  StepKind kind = StepKind::Unknown;
  Hyperrectangle box;
  double gained = 0.0;
  std::string reason;
};

struct Violation {
  std::size_t sample = 0;
  std::string what;
};

/// Lower-bounds the weighted volume of one region by sampling disjoint boxes
/// inside it. Owns one solver session.
class Sampler {
 public:
  Sampler(const pvc::Region& region, dist::DensityMap densities, SamplerConfig config, smt::SolverConfig solver);
  /// Region given directly by a quantifier-free formula over `dims`.
  Sampler(const Formula& phi, std::vector<Var> dims, dist::DensityMap densities, SamplerConfig config,
          smt::SolverConfig solver);
  ~Sampler();
  Sampler(const Sampler&) = delete;
  Sampler& operator=(const Sampler&) = delete;

  StepResult step();
  /// lb ← λ·lb
  void decay();

  double volume() const { return volume_; }
  double lb() const { return lb_; }
  bool exhausted() const { return exhausted_; }
  bool adf_active() const;
  const std::vector<Hyperrectangle>& samples() const { return samples_; }
  const logic::Decomposition& decomposition() const { return decomposition_; }
  const std::vector<Var>& dims() const { return dims_; }
  const std::vector<Violation>& violations() const { return violations_; }
  std::size_t queries() const;

 private:
  void setup(smt::SolverConfig solver);
  void check_sample(const Hyperrectangle& box);

  pvc::Region region_;
  std::vector<Var> dims_;
  dist::DensityMap densities_;
  SamplerConfig config_;
  logic::Decomposition decomposition_;
  std::vector<Var> endpoints_;
  std::vector<Var> deltas_;
  std::unique_ptr<smt::Session> session_;
  std::unique_ptr<smt::Session> checker_;
  std::vector<Hyperrectangle> samples_;
  std::vector<Violation> violations_;
  double volume_ = 0.0;
  double lb_ = 1.0;
  bool exhausted_ = false;
};

struct BoundPair {
  double lower = 0.0;
  double upper = 1.0;
};

/// Runs samplers for φ and ¬φ in alternation, lower first.
class BoundRunner {
 public:
  BoundRunner(const pvc::Region& region, const dist::DensityMap& densities, const SamplerConfig& config,
              const smt::SolverConfig& solver);

  /// One step of each sampler. A NeedDecay answer is followed by a decay.
  void round();
  /// The two halves of a round; independent, so they may run concurrently.
  void step_positive() { advance(*pos_, pos_unknown_); }
  void step_negative() { advance(*neg_, neg_unknown_); }
  BoundPair bounds() const;
  bool settled() const { return pos_->exhausted() && neg_->exhausted(); }
  Sampler& positive() { return *pos_; }
  Sampler& negative() { return *neg_; }
  std::size_t queries() const { return pos_->queries() + neg_->queries(); }
  /// Last unknown reason reported by either side.
  std::string last_unknown() const { return neg_unknown_.empty() ? pos_unknown_ : neg_unknown_; }

 private:
  static void advance(Sampler& s, std::string& unknown);

  std::unique_ptr<Sampler> pos_;
  std::unique_ptr<Sampler> neg_;
  std::string pos_unknown_;
  std::string neg_unknown_;
};

struct Budget {
  std::size_t max_rounds = 1000;
  double seconds = 0.0;  // 0: no wall-clock limit
  /// Stop early once upper − lower is at most this.
  double target_width = 0.0;
};

BoundPair bound_pair(const pvc::Region& region, const dist::DensityMap& densities, const SamplerConfig& config,
                     const smt::SolverConfig& solver, const Budget& budget);

}  // namespace volfair::volume
