#include "posthoc/calibration.hpp"

#include <cmath>
#include <limits>

namespace posthoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string_view strip(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

/// Weighted power mean of values in [0, inf]; zero-weight terms are ignored.
double power_mean(const std::vector<Extended<double>>& e, const std::vector<double>& w, const HIndex& h) {
  bool has_zero = false;
  bool has_inf = false;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (w[i] <= 0) continue;
    has_zero = has_zero || e[i].is_zero();
    has_inf = has_inf || e[i].is_infinite();
  }
  switch (h.kind()) {
    case HIndex::Kind::pos_inf:
    case HIndex::Kind::neg_inf: {
      const bool up = h.kind() == HIndex::Kind::pos_inf;
      double best = up ? 0.0 : kInf;
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (w[i] <= 0) continue;
        best = up ? std::max(best, e[i].to_double()) : std::min(best, e[i].to_double());
      }
      return best;
    }
    case HIndex::Kind::finite:
      break;
  }
  const double hd = h.to_double();
  if (h.value() == 0) {
    if (has_zero && has_inf) throw InvalidArgument("geometric mean undefined: both 0 and inf carry weight");
    if (has_zero) return 0.0;
    if (has_inf) return kInf;
    double s = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (w[i] > 0) s += w[i] * std::log(e[i].to_double());
    return std::exp(s);
  }
  if (hd > 0) {
    if (has_inf) return kInf;
    double s = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (w[i] > 0) s += w[i] * std::pow(e[i].to_double(), hd);
    return std::pow(s, 1.0 / hd);
  }
  // h < 0: 0^h = inf drives the mean to 0; inf^h = 0.
  if (has_zero) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < e.size(); ++i)
    if (w[i] > 0 && e[i].is_finite()) s += w[i] * std::pow(e[i].to_double(), hd);
  if (s == 0) return kInf;
  return std::pow(s, 1.0 / hd);
}

}  // namespace

HIndex HIndex::parse(std::string_view text) {
  auto s = strip(text);
  if (s == "inf" || s == "+inf" || s == "infinity") return infinity();
  if (s == "-inf" || s == "-infinity") return neg_infinity();
  return HIndex(parse_rational(s));
}

const Rational& HIndex::value() const {
  if (kind_ != Kind::finite) throw InvalidArgument("HIndex: value of an infinite index");
  return value_;
}

double HIndex::to_double() const {
  switch (kind_) {
    case Kind::pos_inf:
      return kInf;
    case Kind::neg_inf:
      return -kInf;
    case Kind::finite:
      break;
  }
  return value_.convert_to<double>();
}

std::string HIndex::str() const {
  switch (kind_) {
    case Kind::pos_inf:
      return "inf";
    case Kind::neg_inf:
      return "-inf";
    case Kind::finite:
      break;
  }
  return value_.str();
}

bool operator<(const HIndex& a, const HIndex& b) {
  if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) < static_cast<int>(b.kind_);
  return a.kind_ == HIndex::Kind::finite && a.value_ < b.value_;
}

namespace detail {

double h_mean_member(const std::vector<Extended<double>>& e, const std::vector<double>& probs, const HIndex& h) {
  return power_mean(e, probs, h);
}

}  // namespace detail

MinimalHCounterexample minimal_h_counterexample(const HIndex& h, double q) {
  if (!(q > 0 && q < 1)) throw InvalidArgument("minimal_h_counterexample: q must lie in (0, 1)");
  if (!(h < HIndex(1))) throw InvalidArgument("minimal_h_counterexample: h >= 1 has no counterexample");
  const double hd = h.to_double();
  const double M = (h.is_finite() && hd > 0) ? std::pow(q, -1.0 / hd) : std::pow(q, -2.0);
  DiscreteSpace<double> space({"event", "rest"}, {q, 1.0 - q});
  EvidenceVariable<double> e({"event", "rest"}, {Extended<double>(M), Extended<double>(0.0)}, Scale::e_value);
  return {std::move(space), std::move(e), M};
}

EvidenceVariable<double> merge_h_mean(const std::vector<EvidenceVariable<double>>& evs,
                                      const std::vector<double>& weights, const HIndex& h) {
  if (evs.empty()) throw InvalidArgument("merge_h_mean: no inputs");
  if (weights.size() != evs.size()) throw InvalidArgument("merge_h_mean: one weight per input required");
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw InvalidArgument("merge_h_mean: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > kTolerance) throw InvalidArgument("merge_h_mean: weights must sum to 1");
  const auto& order = evs.front().outcomes();
  std::vector<std::vector<Extended<double>>> e;
  for (const auto& ev : evs) e.push_back(ev.aligned(order, Scale::e_value));
  std::vector<Extended<double>> out;
  for (std::size_t x = 0; x < order.size(); ++x) {
    std::vector<Extended<double>> col;
    for (const auto& ei : e) col.push_back(ei[x]);
    out.emplace_back(power_mean(col, weights, h));
  }
  return EvidenceVariable<double>(order, std::move(out), Scale::e_value);
}

}  // namespace posthoc
