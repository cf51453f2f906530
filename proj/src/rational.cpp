#include "volfair/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace volfair {

Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty numeric literal");

  if (auto slash = s.find('/'); slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    Rational q = num / den;
    q.canonicalize();
    return q;
  }

  bool negative = false;
  std::size_t pos = 0;
  if (s[pos] == '+' || s[pos] == '-') {
    negative = s[pos] == '-';
    ++pos;
  }

  std::string digits;
  long exponent = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
      if (seen_dot) --exponent;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c == 'e' || c == 'E') {
      std::size_t used = 0;
      long e = std::stol(s.substr(pos + 1), &used);
      if (pos + 1 + used != s.size()) throw std::invalid_argument("malformed exponent in '" + s + "'");
      exponent += e;
      pos = s.size();
      break;
    } else {
      throw std::invalid_argument("malformed numeric literal '" + s + "'");
    }
  }
  if (!seen_digit) throw std::invalid_argument("malformed numeric literal '" + s + "'");

  mpz_class mantissa(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
  Rational q = exponent >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

std::string to_smtlib(const Rational& value) {
  Rational mag = abs(value);
  std::string body;
  if (mag.get_den() == 1) {
    body = mag.get_num().get_str() + ".0";
  } else {
    body = "(/ " + mag.get_num().get_str() + ".0 " + mag.get_den().get_str() + ".0)";
  }
  return sgn(value) < 0 ? "(- " + body + ")" : body;
}

std::string to_string(const Rational& value) { return value.get_str(); }

double to_double(const Rational& value) { return value.get_d(); }

Rational from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value has no rational form");
  Rational q(value);
  q.canonicalize();
  return q;
}

}  // namespace volfair
