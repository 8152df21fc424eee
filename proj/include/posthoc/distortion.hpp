#pragma once

// Data-dependent significance levels and their size distortion.

#include "posthoc/evidence_core.hpp"
#include "posthoc/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace posthoc {

/// A level that is either a fixed positive constant or the realized p-value
/// itself (nullopt, "reject at level p").
template <Scalar T>
using StrategyLevel = std::optional<T>;

/// Data-dependent level as a piecewise-constant function of the realized
/// p-value. Piece j covers (b_{j-1}, b_j] with b_0 = 0 and the last piece
/// unbounded, so breakpoints.size() + 1 == levels.size().
template <Scalar T>
class AlphaStrategy {
public:
  AlphaStrategy(std::vector<T> breakpoints, std::vector<StrategyLevel<T>> levels)
      : breakpoints_(std::move(breakpoints)), levels_(std::move(levels)) {
    if (levels_.size() != breakpoints_.size() + 1)
      throw InvalidArgument("AlphaStrategy: need exactly one more level than breakpoints");
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] > T(0))) throw InvalidArgument("AlphaStrategy: breakpoints must be > 0");
      if (i > 0 && !(breakpoints_[i - 1] < breakpoints_[i]))
        throw InvalidArgument("AlphaStrategy: breakpoints must be strictly increasing");
    }
    for (const auto& l : levels_)
      if (l && !(*l > T(0))) throw InvalidArgument("AlphaStrategy: levels must be > 0");
  }

  static AlphaStrategy constant(T a) { return AlphaStrategy({}, {a}); }
  /// alpha~ = p everywhere.
  static AlphaStrategy level_p() { return AlphaStrategy({}, {std::nullopt}); }

  const std::vector<T>& breakpoints() const { return breakpoints_; }
  const std::vector<StrategyLevel<T>>& levels() const { return levels_; }
  std::size_t pieces() const { return levels_.size(); }

  Extended<T> lower(std::size_t j) const { return j == 0 ? Extended<T>(T(0)) : Extended<T>(breakpoints_[j - 1]); }
  Extended<T> upper(std::size_t j) const {
    return j < breakpoints_.size() ? Extended<T>(breakpoints_[j]) : Extended<T>::infinity();
  }

  /// alpha~(p).
  Extended<T> level_at(const Extended<T>& p) const {
    std::size_t j = 0;
    while (j < breakpoints_.size() && Extended<T>(breakpoints_[j]) < p) ++j;
    return levels_[j] ? Extended<T>(*levels_[j]) : p;
  }

private:
  std::vector<T> breakpoints_;
  std::vector<StrategyLevel<T>> levels_;
};

namespace presets {

template <Scalar T>
T lit(const char* text) {
  return parse_scalar<T>(text);
}

/// .01 if p <= .01, else .05.
template <Scalar T>
AlphaStrategy<T> decreasing_alpha() {
  return AlphaStrategy<T>({lit<T>("0.01")}, {lit<T>("0.01"), lit<T>("0.05")});
}

/// .02 if p <= .01, else .01.
template <Scalar T>
AlphaStrategy<T> conservative() {
  return AlphaStrategy<T>({lit<T>("0.01")}, {lit<T>("0.02"), lit<T>("0.01")});
}

/// c if p <= c, else .05.
template <Scalar T>
AlphaStrategy<T> fragility(T c) {
  return AlphaStrategy<T>({c}, {c, lit<T>("0.05")});
}

/// Exact p-value: Unif(0, 1].
template <Scalar T>
PValueLaw<T> exact_law() {
  return PValueLaw<T>::uniform();
}

/// Unif(0, 1) with probability 1/2, atom at 1 with probability 1/2.
template <Scalar T>
PValueLaw<T> valid_hacking_law() {
  return PValueLaw<T>({{Extended<T>(T(1)), lit<T>("0.5")}}, {{T(0), T(1), lit<T>("0.5")}});
}

}  // namespace presets

template <Scalar T>
struct LevelRow {
  T level;
  T mass;       // P(alpha~ = level)
  T size;       // P(p <= alpha~ | alpha~ = level)
  T distortion; // size / level
};

template <Scalar T>
struct DistortionReport {
  std::vector<LevelRow<T>> per_level;
  Extended<T> expected_distortion;
  Extended<T> max_distortion;
  /// False when a "reject at level p" piece over a continuous part forced a
  /// floating-point logarithm.
  bool exact = true;
};

namespace detail {

template <Scalar T>
Extended<T> min_ext(const Extended<T>& a, const Extended<T>& b) {
  return a < b ? a : b;
}
template <Scalar T>
Extended<T> max_ext(const Extended<T>& a, const Extended<T>& b) {
  return a < b ? b : a;
}

}  // namespace detail

/// Per-level sizes plus expected and maximum size distortion. Intervals are
/// half-open (lo, hi], matching the non-strict comparison p <= alpha~.
template <Scalar T>
DistortionReport<T> distortion_report(const PValueLaw<T>& law, const AlphaStrategy<T>& s) {
  using E = Extended<T>;
  struct Acc {
    T mass{0};
    T rejecting{0};
  };
  std::map<T, Acc> by_level;
  E continuous_max(T(0));
  double log_part = 0;
  bool has_log = false;
  bool divergent = false;

  for (std::size_t j = 0; j < s.pieces(); ++j) {
    const E lo = s.lower(j);
    const E hi = s.upper(j);
    if (const auto& lvl = s.levels()[j]) {
      Acc& acc = by_level[*lvl];
      acc.mass += law.mass_between(lo, hi);
      acc.rejecting += law.mass_between(lo, detail::min_ext(hi, E(*lvl)));
      continue;
    }
    // alpha~ = p: every outcome rejects at its own level.
    for (const auto& a : law.atoms()) {
      if (a.mass == T(0) || !(lo < a.location && a.location <= hi) || a.location.is_infinite()) continue;
      Acc& acc = by_level[a.location.finite()];
      acc.mass += a.mass;
      acc.rejecting += a.mass;
    }
    for (const auto& p : law.pieces()) {
      if (p.mass == T(0)) continue;
      const E from = detail::max_ext(lo, E(p.lower));
      const E to = detail::min_ext(hi, E(p.upper));
      if (!(from < to)) continue;
      if (from.is_zero()) {
        divergent = true;
        continue;
      }
      continuous_max = detail::max_ext(continuous_max, from.reciprocal());
      has_log = true;
      log_part += to_double(p.mass) / to_double(T(p.upper - p.lower)) * std::log(to.to_double() / from.to_double());
    }
  }

  DistortionReport<T> r;
  E expected(T(0));
  E max_d = continuous_max;
  for (auto& [level, acc] : by_level) {
    if (acc.mass == T(0)) continue;
    T size = acc.rejecting / acc.mass;
    T dist = size / level;
    r.per_level.push_back({level, acc.mass, size, dist});
    expected += E(acc.rejecting / level);
    max_d = detail::max_ext(max_d, E(dist));
  }
  if (divergent) {
    r.expected_distortion = E::infinity();
    r.max_distortion = E::infinity();
    return r;
  }
  if (has_log) {
    r.exact = !has_log;
    expected = E(ScalarTraits<T>::from_double(expected.to_double() + log_part));
  }
  r.expected_distortion = expected;
  r.max_distortion = max_d;
  return r;
}

/// P(p <= alpha~ | alpha~ = a).
template <Scalar T>
T conditional_size(const PValueLaw<T>& law, const AlphaStrategy<T>& s, const T& a) {
  for (const auto& row : distortion_report(law, s).per_level)
    if (row.level == a) return row.size;
  throw InvalidArgument("conditional_size: level " + format(a) + " has zero probability under this strategy");
}

template <Scalar T>
Extended<T> expected_size_distortion(const PValueLaw<T>& law, const AlphaStrategy<T>& s) {
  return distortion_report(law, s).expected_distortion;
}

template <Scalar T>
Extended<T> max_size_distortion(const PValueLaw<T>& law, const AlphaStrategy<T>& s) {
  return distortion_report(law, s).max_distortion;
}

/// Draws one p-value from a stream.
using PSampler = std::function<double(CounterRng&)>;

/// Inverse-CDF-free sampler for a PValueLaw: pick a component by mass, then
/// the atom location or a uniform point of the piece.
inline PSampler sampler_of(const PValueLaw<double>& law) {
  struct Component {
    double cumulative;
    double lo;
    double hi;  // lo == hi for an atom
  };
  std::vector<Component> comps;
  double c = 0;
  for (const auto& a : law.atoms()) {
    if (a.mass <= 0) continue;
    c += a.mass;
    comps.push_back({c, a.location.to_double(), a.location.to_double()});
  }
  for (const auto& p : law.pieces()) {
    if (p.mass <= 0) continue;
    c += p.mass;
    comps.push_back({c, p.lower, p.upper});
  }
  return [comps, total = c](CounterRng& rng) {
    const double u = rng.uniform01() * total;
    std::size_t k = 0;
    while (k + 1 < comps.size() && u >= comps[k].cumulative) ++k;
    const auto& comp = comps[k];
    if (comp.lo == comp.hi) return comp.lo;
    return comp.lo + (comp.hi - comp.lo) * rng.uniform_open_closed();
  };
}

struct MonteCarloEstimate {
  double estimate = 0;
  double standard_error = 0;
  std::uint64_t n = 0;
};

inline MonteCarloEstimate estimate_from(const MomentSums& m) {
  MonteCarloEstimate r;
  r.n = m.count;
  if (m.count == 0) return r;
  const double n = static_cast<double>(m.count);
  r.estimate = m.sum / n;
  const double var = m.count > 1 ? std::max(0.0, (m.sum_sq - n * r.estimate * r.estimate) / (n - 1)) : 0.0;
  r.standard_error = std::sqrt(var / n);
  return r;
}

/// Mean of 1{p <= alpha~(p)} / alpha~(p) over n draws; draw i uses stream i.
inline MonteCarloEstimate monte_carlo_distortion(const PSampler& sampler, const AlphaStrategy<double>& s,
                                                 std::uint64_t n, std::uint64_t seed,
                                                 unsigned workers = default_workers()) {
  if (n == 0) throw InvalidArgument("monte_carlo_distortion: n must be >= 1");
  auto sums = reduce_moments(
      n,
      [&](std::uint64_t i) {
        CounterRng rng(seed, i);
        const double p = sampler(rng);
        const double a = s.level_at(Extended<double>(p)).to_double();
        if (std::isinf(a)) return 0.0;
        return p <= a ? 1.0 / a : 0.0;
      },
      workers);
  return estimate_from(sums);
}

enum class AuditVerdict { controls, fails };

inline const char* to_string(AuditVerdict v) { return v == AuditVerdict::controls ? "CONTROLS" : "FAILS"; }

template <Scalar T>
struct AuditResult {
  AuditVerdict verdict;
  Extended<T> essential_infimum;
  /// alpha~ = p on (0, 1], 1 above; present when the verdict is FAILS.
  std::optional<AlphaStrategy<T>> witness;
  /// Max size distortion of the witness, computed by the distortion engine.
  std::optional<Extended<T>> witness_max_distortion;
};

/// A test function controls the maximum size distortion for every
/// data-dependent level iff it never rejects below level 1.
template <Scalar T>
AuditResult<T> impossibility_audit(const PValueLaw<T>& law) {
  const Extended<T> inf = law.essential_infimum();
  if (Extended<T>(T(1)) <= inf) return {AuditVerdict::controls, inf, std::nullopt, std::nullopt};
  AlphaStrategy<T> w({T(1)}, {std::nullopt, T(1)});
  Extended<T> d = max_size_distortion(law, w);
  return {AuditVerdict::fails, inf, std::move(w), d};
}

}  // namespace posthoc
