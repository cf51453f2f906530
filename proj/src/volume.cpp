#include "volfair/volume.hpp"

#include <algorithm>

namespace volfair::volume {

using logic::LinearTerm;

namespace {

// Per-sample allowance for floating-point error in the CDF products, so that
// each gained volume stays below its exact value.
constexpr double kSlackAbs = 1e-14;
constexpr double kSlackRel = 1e-12;

double rounded_down_volume(const Hyperrectangle& box, const dist::DensityMap& densities) {
  double v = dist::rect_volume(box, densities);
  bool whole_space = std::all_of(box.bounds().begin(), box.bounds().end(), [](const logic::Interval& i) {
    return !i.lo.is_finite() && !i.hi.is_finite();
  });
  if (whole_space) return v;
  return std::max(0.0, v - kSlackAbs - kSlackRel * v);
}

}  // namespace

std::string to_string(StepKind k) {
  switch (k) {
    case StepKind::Progress: return "progress";
    case StepKind::NeedDecay: return "need-decay";
    case StepKind::Exhausted: return "exhausted";
    case StepKind::Unknown: return "unknown";
  }
  return "?";
}

Sampler::Sampler(const pvc::Region& region, dist::DensityMap densities, SamplerConfig config,
                 smt::SolverConfig solver)
    : region_(region), dims_(region.dims), densities_(std::move(densities)), config_(config) {
  std::set<Var> taken = logic::free_vars(region.frame);
  auto more = logic::free_vars(region.cond);
  taken.insert(more.begin(), more.end());
  taken.insert(region.hidden.begin(), region.hidden.end());
  taken.insert(dims_.begin(), dims_.end());
  decomposition_ =
      logic::decompose_projected(region.frame, region.hidden, region.cond, dims_, config_.dnf_cap, taken);
  setup(std::move(solver));
}

Sampler::Sampler(const Formula& phi, std::vector<Var> dims, dist::DensityMap densities, SamplerConfig config,
                 smt::SolverConfig solver)
    : Sampler(pvc::Region{logic::mk_true(), {}, phi, std::move(dims)}, std::move(densities), config,
              std::move(solver)) {}

Sampler::~Sampler() = default;

void Sampler::setup(smt::SolverConfig solver) {
  for (const auto& d : dims_) {
    if (!densities_.count(d)) throw std::invalid_argument("no density for '" + d + "'");
  }
  endpoints_ = decomposition_.vars.endpoint_vars();
  session_ = std::make_unique<smt::Session>(solver);
  for (const auto& v : endpoints_) session_->declare(v);
  session_->add(decomposition_.psi());
  if (decomposition_.psi().is_false()) exhausted_ = true;
  if (config_.check_soundness) checker_ = std::make_unique<smt::Session>(solver);

  if (config_.adf == dist::AdfKind::None) return;
  std::set<Var> taken(endpoints_.begin(), endpoints_.end());
  taken.insert(dims_.begin(), dims_.end());
  for (const auto& d : dims_) {
    auto adf = dist::make_adf(densities_.at(d), config_.adf, config_.adf_steps, config_.adf_span);
    if (!adf) continue;
    Var delta = logic::fresh_name("delta_" + d, taken);
    taken.insert(delta);
    Var prefix = logic::fresh_name("ov_" + d + "_", taken);
    dist::AreaEncoding enc = dist::adf_area_encoding(*adf, delta, decomposition_.vars.lower.at(d),
                                                     decomposition_.vars.upper.at(d), prefix);
    taken.insert(enc.aux.begin(), enc.aux.end());
    // The area definition fixes δ from the endpoints, so it stays asserted
    // while the threshold changes.
    session_->add(enc.formula);
    deltas_.push_back(delta);
  }
}

bool Sampler::adf_active() const { return !deltas_.empty() && lb_ >= config_.adf_floor; }

std::size_t Sampler::queries() const {
  return session_->stats().queries + (checker_ ? checker_->stats().queries : 0);
}

void Sampler::decay() { lb_ *= config_.decay; }

StepResult Sampler::step() {
  StepResult r;
  if (exhausted_) {
    r.kind = StepKind::Exhausted;
    return r;
  }
  smt::Answer a;
  bool guided = adf_active();
  if (guided) {
    Rational threshold = from_double(lb_);
    std::vector<Formula> guard;
    for (const auto& d : deltas_) guard.push_back(logic::ge(LinearTerm::var(d), LinearTerm(threshold)));
    a = session_->check_and_model(logic::mk_and(std::move(guard)), endpoints_);
  } else {
    a = session_->check_and_model(endpoints_);
  }
  if (a.result == smt::Result::Unknown) {
    r.kind = StepKind::Unknown;
    r.reason = a.reason.empty() ? "solver returned unknown" : a.reason;
    return r;
  }
  if (a.result == smt::Result::Unsat) {
    if (guided) {
      // No box at all is left when Ψ alone is unsatisfiable.
      smt::Result plain = session_->check();
      if (plain == smt::Result::Unsat) {
        exhausted_ = true;
        r.kind = StepKind::Exhausted;
      } else {
        r.kind = StepKind::NeedDecay;
      }
      return r;
    }
    exhausted_ = true;
    r.kind = StepKind::Exhausted;
    return r;
  }

  Hyperrectangle box = logic::induced_rectangle(a.model, decomposition_.vars);
  if (config_.maximize) {
    box = smt::maximize_box(session_.get(), decomposition_.psi(), samples_, box, decomposition_.vars,
                            config_.maximize_passes);
  }
  if (config_.check_soundness) check_sample(box);
  r.kind = StepKind::Progress;
  r.gained = rounded_down_volume(box, densities_);
  volume_ += r.gained;
  session_->add(logic::block(box, decomposition_.vars));
  samples_.push_back(box);
  r.box = std::move(box);
  return r;
}

void Sampler::check_sample(const Hyperrectangle& box) {
  std::size_t index = samples_.size();
  // H ⇒ ∃hidden. frame ∧ cond, using the functional frame: H ∧ frame ∧ ¬cond is unsatisfiable.
  checker_->push();
  checker_->add(box.to_formula());
  checker_->add(region_.frame);
  checker_->add(logic::mk_not(region_.cond));
  smt::Result inside = checker_->check();
  checker_->pop();
  if (inside != smt::Result::Unsat) {
    violations_.push_back({index, "box " + box.str() + " is not contained in the region (" +
                                      smt::to_string(inside) + ")"});
  }
  if (samples_.empty()) return;
  std::vector<Formula> earlier;
  for (const auto& s : samples_) earlier.push_back(s.to_formula());
  checker_->push();
  checker_->add(box.to_formula());
  checker_->add(logic::mk_or(std::move(earlier)));
  smt::Result overlap = checker_->check();
  checker_->pop();
  if (overlap != smt::Result::Unsat) {
    violations_.push_back({index, "box " + box.str() + " overlaps an earlier sample (" + smt::to_string(overlap) +
                                      ")"});
  }
}

BoundRunner::BoundRunner(const pvc::Region& region, const dist::DensityMap& densities, const SamplerConfig& config,
                         const smt::SolverConfig& solver)
    : pos_(std::make_unique<Sampler>(region, densities, config, solver)),
      neg_(std::make_unique<Sampler>(region.negated(), densities, config, solver)) {}

void BoundRunner::advance(Sampler& s, std::string& unknown) {
  StepResult r = s.step();
  if (r.kind == StepKind::NeedDecay) s.decay();
  if (r.kind == StepKind::Unknown) unknown = r.reason;
}

void BoundRunner::round() {
  step_positive();
  step_negative();
}

BoundPair BoundRunner::bounds() const {
  BoundPair b;
  b.lower = std::min(1.0, pos_->volume());
  b.upper = std::max(0.0, 1.0 - neg_->volume());
  return b;
}

BoundPair bound_pair(const pvc::Region& region, const dist::DensityMap& densities, const SamplerConfig& config,
                     const smt::SolverConfig& solver, const Budget& budget) {
  auto start = std::chrono::steady_clock::now();
  BoundRunner runner(region, densities, config, solver);
  for (std::size_t i = 0; i < budget.max_rounds && !runner.settled(); ++i) {
    if (budget.seconds > 0) {
      std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start;
      if (spent.count() >= budget.seconds) break;
    }
    runner.round();
    BoundPair b = runner.bounds();
    if (budget.target_width > 0 && b.upper - b.lower <= budget.target_width) break;
  }
  return runner.bounds();
}

}  // namespace volfair::volume
