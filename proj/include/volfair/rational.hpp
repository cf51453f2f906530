#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace volfair {

using Rational = mpq_class;

/// Parses an exact decimal literal ("12", "-0.0003", "1.5e3", "3/4").
Rational parse_rational(std::string_view text);

/// Exact SMT-LIB 2 rendering: integers as "3.0", others as "(/ p.0 q.0)",
/// negatives wrapped in "(- ...)".
std::string to_smtlib(const Rational& value);

/// Short human-readable rendering ("3", "-1/2").
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Exact rational for a finite double.
Rational from_double(double value);

}  // namespace volfair
