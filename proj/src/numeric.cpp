#include "posthoc/numeric.hpp"

#include <cctype>

namespace posthoc {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

Rational pow10(long k) {
  boost::multiprecision::cpp_int p = 1;
  for (long i = 0; i < (k < 0 ? -k : k); ++i) p *= 10;
  return k < 0 ? Rational(boost::multiprecision::cpp_int(1), p) : Rational(p);
}

Rational parse_decimal(std::string_view s, std::string_view whole) {
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    auto exp_text = s.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc() || ptr != exp_text.data() + exp_text.size())
      throw InvalidArgument("cannot parse number '" + std::string(whole) + "'");
    s = s.substr(0, e);
  }
  boost::multiprecision::cpp_int digits = 0;
  long fraction_digits = 0;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = digits * 10 + (c - '0');
      seen_digit = true;
      if (seen_point) ++fraction_digits;
    } else {
      throw InvalidArgument("cannot parse number '" + std::string(whole) + "'");
    }
  }
  if (!seen_digit) throw InvalidArgument("cannot parse number '" + std::string(whole) + "'");
  Rational r = Rational(digits) * pow10(exponent - fraction_digits);
  return negative ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto s = trim(text);
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(trim(s.substr(0, slash)), text);
    Rational den = parse_decimal(trim(s.substr(slash + 1)), text);
    if (den == 0) throw InvalidArgument("zero denominator in '" + std::string(text) + "'");
    return num / den;
  }
  return parse_decimal(s, text);
}

template <>
double parse_scalar<double>(std::string_view text) {
  auto s = trim(text);
  if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  if (s.find('/') != std::string_view::npos) return parse_rational(s).convert_to<double>();
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("cannot parse number '" + std::string(text) + "'");
  return v;
}

}  // namespace posthoc
