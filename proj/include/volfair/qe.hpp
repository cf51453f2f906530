#pragma once

#include <optional>
#include <vector>

#include "volfair/formula.hpp"

namespace volfair::logic {

inline constexpr std::size_t kDefaultDnfCap = 20000;

/// Drops implied parallel inequalities and folds ground atoms.
/// Returns nullopt if the conjunction is syntactically infeasible.
std::optional<Conjunction> simplify(Conjunction conj);

/// Fourier–Motzkin projection of `vars` out of a conjunction (exact).
/// Equalities are eliminated by substitution first. nullopt means infeasible.
std::optional<Conjunction> fm_project(Conjunction conj, const std::vector<Var>& vars);

/// ∃vars. (d_1 ∨ ... ∨ d_k), each disjunct projected independently.
std::vector<Conjunction> project_dnf(const std::vector<Conjunction>& dnf, const std::vector<Var>& vars);

/// Equivalent quantifier-free formula. ∃ by DNF + Fourier–Motzkin; ∀ as ¬∃¬.
/// Throws DnfOverflow when an intermediate DNF exceeds `dnf_cap` disjuncts.
Formula eliminate_quantifiers(const Formula& f, std::size_t dnf_cap = kDefaultDnfCap);

}  // namespace volfair::logic
