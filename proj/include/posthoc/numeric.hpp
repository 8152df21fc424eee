#pragma once

// Scalar backends and the extended half-line [0, +inf].
//
// Every container in the library is parameterised on a scalar type T. Two
// backends are supported:
//   - posthoc::Rational (exact, boost::multiprecision::cpp_rational)
//   - double            (floating point; comparisons use kTolerance)

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <compare>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace posthoc {

using Rational = boost::multiprecision::cpp_rational;

/// Absolute tolerance used by the floating-point backend for validity
/// verdicts and normalisation checks.
inline constexpr double kTolerance = 1e-12;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static constexpr const char* name = "float";
  static double tolerance() { return kTolerance; }
  static double to_double(double v) { return v; }
  static double from_double(double v) { return v; }
  static double from_rational(const Rational& r) { return r.convert_to<double>(); }
  static std::string format(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static constexpr const char* name = "exact";
  static Rational tolerance() { return Rational(0); }
  static double to_double(const Rational& v) { return v.convert_to<double>(); }
  static Rational from_double(double v) { return Rational(v); }
  static Rational from_rational(const Rational& r) { return r; }
  static std::string format(const Rational& v) { return v.str(); }
};

template <class T>
concept Scalar = requires { ScalarTraits<T>::exact; };

template <Scalar T>
double to_double(const T& v) {
  return ScalarTraits<T>::to_double(v);
}

template <Scalar T>
T tolerance() {
  return ScalarTraits<T>::tolerance();
}

/// Exact decimal / fraction parsing: "0.05", "-1.5e-3", "4/99", "7".
Rational parse_rational(std::string_view text);

template <Scalar T>
T parse_scalar(std::string_view text) {
  return ScalarTraits<T>::from_rational(parse_rational(text));
}

template <>
double parse_scalar<double>(std::string_view text);

/// A value in [0, +inf]. Arithmetic follows the measure-theoretic
/// conventions 0 * inf = 0, 1/0 = inf, 1/inf = 0.
template <Scalar T>
class Extended {
public:
  Extended() = default;
  Extended(int v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  Extended(T v) {                 // NOLINT(google-explicit-constructor)
    if constexpr (!ScalarTraits<T>::exact) {
      if (std::isinf(v)) {
        if (v < 0) throw InvalidArgument("Extended: negative infinity is not representable");
        infinite_ = true;
        return;
      }
      if (std::isnan(v)) throw InvalidArgument("Extended: NaN");
    }
    value_ = std::move(v);
  }

  static Extended infinity() {
    Extended e;
    e.infinite_ = true;
    return e;
  }

  bool is_infinite() const { return infinite_; }
  bool is_finite() const { return !infinite_; }
  bool is_zero() const { return !infinite_ && value_ == T(0); }

  const T& finite() const {
    if (infinite_) throw InvalidArgument("Extended: value is infinite");
    return value_;
  }

  double to_double() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : posthoc::to_double(value_);
  }

  Extended reciprocal() const {
    if (infinite_) return Extended(T(0));
    if (value_ == T(0)) return infinity();
    return Extended(T(1) / value_);
  }

  std::string str() const { return infinite_ ? "inf" : ScalarTraits<T>::format(value_); }

  friend Extended operator+(const Extended& a, const Extended& b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return Extended(a.value_ + b.value_);
  }
  Extended& operator+=(const Extended& o) { return *this = *this + o; }

  friend Extended operator*(const Extended& a, const Extended& b) {
    if (a.is_zero() || b.is_zero()) return Extended(T(0));
    if (a.infinite_ || b.infinite_) return infinity();
    return Extended(a.value_ * b.value_);
  }
  Extended& operator*=(const Extended& o) { return *this = *this * o; }

  /// a / b with 0/0 rejected; x/0 = inf for x > 0, x/inf = 0 for finite x.
  friend Extended operator/(const Extended& a, const Extended& b) {
    if (a.is_zero() && b.is_zero()) throw InvalidArgument("Extended: 0/0");
    if (a.infinite_ && b.infinite_) throw InvalidArgument("Extended: inf/inf");
    return a * b.reciprocal();
  }

  friend bool operator==(const Extended& a, const Extended& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend std::strong_ordering operator<=>(const Extended& a, const Extended& b) {
    if (a.infinite_ || b.infinite_) {
      if (a.infinite_ == b.infinite_) return std::strong_ordering::equal;
      return a.infinite_ ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    if (a.value_ < b.value_) return std::strong_ordering::less;
    if (b.value_ < a.value_) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

private:
  T value_{0};
  bool infinite_ = false;
};

/// a <= b + tol (exact comparison for the rational backend).
template <Scalar T>
bool at_most(const Extended<T>& a, const T& b) {
  if (a.is_infinite()) return false;
  return a.finite() <= b + tolerance<T>();
}

template <Scalar T>
bool nearly_equal(const T& a, const T& b) {
  T d = a - b;
  if (d < T(0)) d = -d;
  return d <= tolerance<T>();
}

template <Scalar T>
std::string format(const T& v) {
  return ScalarTraits<T>::format(v);
}

}  // namespace posthoc
