#pragma once

// h-generalized means of e-values and h-validity.

#include "posthoc/evidence_core.hpp"

#include <string>
#include <vector>

namespace posthoc {

/// h in [-inf, +inf], stored exactly so that 0 and +-inf dispatch to their
/// closed forms.
class HIndex {
public:
  enum class Kind { neg_inf, finite, pos_inf };

  HIndex(Rational h) : kind_(Kind::finite), value_(std::move(h)) {}  // NOLINT(google-explicit-constructor)
  HIndex(int h) : HIndex(Rational(h)) {}                               // NOLINT(google-explicit-constructor)
  static HIndex infinity() { return HIndex(Kind::pos_inf); }
  static HIndex neg_infinity() { return HIndex(Kind::neg_inf); }
  static HIndex parse(std::string_view text);

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::finite; }
  const Rational& value() const;
  double to_double() const;
  std::string str() const;

  friend bool operator==(const HIndex& a, const HIndex& b) { return a.kind_ == b.kind_ && a.value_ == b.value_; }
  friend bool operator<(const HIndex& a, const HIndex& b);

private:
  explicit HIndex(Kind k) : kind_(k) {}
  Kind kind_;
  Rational value_{0};
};

template <Scalar T>
struct HMean {
  Extended<T> value;
  /// False when a non-integer power or a logarithm was evaluated in
  /// floating point.
  bool exact = false;
};

namespace detail {

/// rho_h of e under a single member, in floating point.
double h_mean_member(const std::vector<Extended<double>>& e, const std::vector<double>& probs, const HIndex& h);

}  // namespace detail

/// sup over H of rho_h(e). With the rational backend, h = +-inf and h = +-1
/// are evaluated exactly; every other h goes through floating point.
template <Scalar T>
HMean<T> h_mean(const EvidenceVariable<T>& ev, const HIndex& h, const Hypothesis<T>& H) {
  if (ev.scale() != Scale::e_value) throw InvalidArgument("h_mean: evidence must be on the e-scale");
  const bool closed_form = !h.is_finite() || h.value() == 1 || h.value() == -1;
  if constexpr (ScalarTraits<T>::exact) {
    if (closed_form) {
      Extended<T> best(T(0));
      for (std::size_t m = 0; m < H.size(); ++m) {
        const auto& P = H.members()[m];
        auto e = ev.aligned(P.outcomes(), Scale::e_value);
        Extended<T> v;
        if (!h.is_finite()) {
          bool first = true;
          for (std::size_t x = 0; x < P.size(); ++x) {
            if (P.prob(x) == T(0)) continue;
            if (first || (h.kind() == HIndex::Kind::pos_inf ? e[x] > v : e[x] < v)) v = e[x];
            first = false;
          }
        } else if (h.value() == 1) {
          v = expectation<T>(P, e);
        } else {
          std::vector<Extended<T>> inv;
          for (const auto& x : e) inv.push_back(x.reciprocal());
          v = expectation<T>(P, inv).reciprocal();
        }
        if (m == 0 || v > best) best = v;
      }
      return {best, true};
    }
  }
  double best = 0;
  for (std::size_t m = 0; m < H.size(); ++m) {
    const auto& P = H.members()[m];
    auto e = ev.aligned(P.outcomes(), Scale::e_value);
    std::vector<Extended<double>> ed;
    std::vector<double> pd;
    for (std::size_t x = 0; x < P.size(); ++x) {
      ed.emplace_back(e[x].to_double());
      pd.push_back(to_double(P.prob(x)));
    }
    const double v = detail::h_mean_member(ed, pd, h);
    if (m == 0 || v > best) best = v;
  }
  const Extended<T> value = std::isinf(best) ? Extended<T>::infinity() : Extended<T>(ScalarTraits<T>::from_double(best));
  return {value, false};
}

/// rho_h(e) <= 1 + 1e-12.
template <Scalar T>
bool check_h_validity(const EvidenceVariable<T>& ev, const HIndex& h, const Hypothesis<T>& H) {
  auto r = h_mean(ev, h, H);
  if (r.exact) return at_most(r.value, T(1));
  return r.value.to_double() <= 1.0 + kTolerance;
}

struct MinimalHCounterexample {
  DiscreteSpace<double> space;  // {"event": q, "rest": 1 - q}
  EvidenceVariable<double> evidence;
  double M;
};

/// e = M 1{event}, P(event) = q. For 0 < h < 1, M = q^{-1/h} gives
/// rho_h(e) = 1 and classical sup q^{1 - 1/h} > 1. For h <= 0 the zero
/// outcome already forces rho_h(e) = 0, and M = q^{-2} gives sup 1/q > 1.
MinimalHCounterexample minimal_h_counterexample(const HIndex& h, double q);

/// inf over H of E[p] >= 1 - 1e-12.
template <Scalar T>
bool size_difference_validity(const TestFunction<T>& tf, const Hypothesis<T>& H) {
  for (const auto& P : H.members()) {
    auto p = tf.p().aligned(P.outcomes(), Scale::p_value);
    Extended<T> mean = expectation<T>(P, p);
    if (mean.is_infinite()) continue;
    if (mean.finite() + tolerance<T>() < T(1)) return false;
  }
  return true;
}

/// (sum_i w_i e_i^h)^{1/h} pointwise, with the h = 0 and +-inf limits.
EvidenceVariable<double> merge_h_mean(const std::vector<EvidenceVariable<double>>& evs,
                                      const std::vector<double>& weights, const HIndex& h);

}  // namespace posthoc
