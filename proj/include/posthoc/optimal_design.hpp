#pragma once

// Expected-utility-optimal post-hoc p-values for a simple null P against a
// simple alternative Q on a finite outcome set.

#include "posthoc/evidence_core.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace posthoc {

class UtilitySpec {
public:
  enum class Kind { log, power, neyman_pearson };

  static UtilitySpec log_utility() { return UtilitySpec(Kind::log, 0); }
  /// U(x) = x^{1-gamma} / (1 - gamma), gamma > 0, gamma != 1.
  static UtilitySpec power(double gamma);
  /// U(x) = min(x, 1/alpha*), 0 < alpha* < 1.
  static UtilitySpec neyman_pearson(double alpha_star);
  /// "log", "power:2", "np:0.1".
  static UtilitySpec parse(std::string_view text);

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }
  std::string str() const;

  /// U(x) on [0, inf]; may return -inf at 0 or +inf at inf.
  double operator()(double x) const;

private:
  UtilitySpec(Kind k, double p) : kind_(k), param_(p) {}
  Kind kind_;
  double param_;
};

template <Scalar T>
struct SimplePair {
  SimplePair(DiscreteSpace<T> p, const DiscreteSpace<T>& q) : P(std::move(p)), Q(q.reordered(P.outcomes())) {}
  DiscreteSpace<T> P;
  DiscreteSpace<T> Q;

  const std::vector<OutcomeId>& outcomes() const { return P.outcomes(); }
  std::size_t size() const { return P.size(); }
};

/// f_P / f_Q with x/0 = inf for x > 0 and 0/0 = 1.
template <Scalar T>
Extended<T> density_ratio(const T& num, const T& den) {
  if (num == T(0) && den == T(0)) return Extended<T>(T(1));
  if (den == T(0)) return Extended<T>::infinity();
  return Extended<T>(num / den);
}

/// p*(x) = f_P(x) / f_Q(x). Outcomes null under both get 1.
template <Scalar T>
EvidenceVariable<T> log_optimal(const SimplePair<T>& pair) {
  std::vector<Extended<T>> p;
  for (std::size_t x = 0; x < pair.size(); ++x) p.push_back(density_ratio(pair.P.prob(x), pair.Q.prob(x)));
  return EvidenceVariable<T>(pair.outcomes(), std::move(p), Scale::p_value);
}

template <Scalar T>
struct NPResult {
  EvidenceVariable<T> p;
  /// Boundary value of r = f_P / f_Q.
  Extended<T> c;
  /// p* on {r = c}; inf when no boundary mass is needed.
  Extended<T> k;
  /// Normalisation constant 1/c.
  Extended<T> lambda;
};

/// Neyman-Pearson utility min(e, 1/alpha*): p* = alpha* on {r < c}, k on
/// {r = c}, inf on {r > c}, where c is the smallest r-value v with
/// P(r <= v) > alpha* and k = alpha* P(r = c) / (alpha* - P(r < c)) makes
/// E_P[1/p*] = 1.
template <Scalar T>
NPResult<T> np_optimal(const SimplePair<T>& pair, const T& alpha_star) {
  if (!(alpha_star > T(0) && alpha_star < T(1))) throw InvalidArgument("np_optimal: alpha* must lie in (0, 1)");
  const std::size_t n = pair.size();
  std::vector<Extended<T>> r(n);
  std::map<Extended<T>, T> mass;  // P-mass per distinct ratio
  for (std::size_t x = 0; x < n; ++x) {
    r[x] = density_ratio(pair.P.prob(x), pair.Q.prob(x));
    mass[r[x]] += pair.P.prob(x);
  }
  T below(0);
  Extended<T> c;
  T at_c(0);
  bool found = false;
  for (const auto& [v, m] : mass) {
    if (below + m > alpha_star + tolerance<T>()) {
      c = v;
      at_c = m;
      found = true;
      break;
    }
    below += m;
  }
  if (!found) throw Error("np_optimal: no boundary ratio found (P-mass does not exceed alpha*)");
  const Extended<T> k = nearly_equal(below, alpha_star) ? Extended<T>::infinity()
                                                : Extended<T>(alpha_star * at_c / (alpha_star - below));
  std::vector<Extended<T>> p(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (pair.P.prob(x) == T(0) && pair.Q.prob(x) == T(0)) p[x] = Extended<T>::infinity();
    else if (r[x] < c) p[x] = Extended<T>(alpha_star);
    else if (r[x] == c) p[x] = k;
    else p[x] = Extended<T>::infinity();
  }
  return {EvidenceVariable<T>(pair.outcomes(), std::move(p), Scale::p_value), c, k, c.reciprocal()};
}

template <Scalar T>
struct DoublePosthocReport {
  Extended<T> null_side;         // E_P[f_Q / f_P]
  Extended<T> alternative_side;  // E_Q[f_P / f_Q]
  bool valid = false;
};

/// The likelihood ratio is post-hoc valid under P and its reciprocal under Q.
template <Scalar T>
DoublePosthocReport<T> double_posthoc_check(const SimplePair<T>& pair) {
  for (std::size_t x = 0; x < pair.size(); ++x)
    if ((pair.P.prob(x) == T(0)) != (pair.Q.prob(x) == T(0)))
      throw InvalidArgument("double_posthoc_check: P and Q are not mutually absolutely continuous at outcome '" +
                            pair.outcomes()[x] + "'");
  auto p = log_optimal(pair);
  auto null_side = check_posthoc_validity(p, Hypothesis<T>(pair.P));
  // Under Q the roles swap: f_P / f_Q is read as an e-value.
  EvidenceVariable<T> reversed(p.outcomes(), p.values(), Scale::e_value);
  auto alt_side = check_posthoc_validity(reversed, Hypothesis<T>(pair.Q));
  return {null_side.statistic, alt_side.statistic, null_side.valid && alt_side.valid};
}

/// E_Q[U(e)], outcomes with Q-mass 0 contributing nothing.
template <Scalar T>
double expected_utility(const EvidenceVariable<T>& ev, const DiscreteSpace<T>& Q, const UtilitySpec& U) {
  auto e = ev.aligned(Q.outcomes(), Scale::e_value);
  double total = 0;
  for (std::size_t x = 0; x < Q.size(); ++x) {
    const double q = to_double(Q.prob(x));
    if (q == 0) continue;
    total += q * U(e[x].to_double());
  }
  return total;
}

struct UtilityOptimum {
  EvidenceVariable<double> e;  // e-scale
  double lambda = 0;
  double null_expectation = 0;  // E_P[e*]
};

/// Solves lambda f_P/f_Q in dU(e*) with E_P[e*] = 1. Differentiable U uses
/// e* = (U')^{-1}(lambda f_P / f_Q) with lambda in closed form; the
/// Neyman-Pearson kink goes through np_optimal.
UtilityOptimum utility_optimal(const SimplePair<double>& pair, const UtilitySpec& U);

/// Grid oracle: best E_Q[U(e)] over e with P-weights f_P(x) e(x) on the
/// simplex grid {k / resolution}. At most 6 outcomes, all with f_P > 0.
struct GridOptimum {
  EvidenceVariable<double> e;
  double utility;
};
GridOptimum brute_force_optimal(const SimplePair<double>& pair, const UtilitySpec& U, int resolution);

/// N(0,1) against N(shift,1), discretised into `cells` cells of equal
/// N(0,1)-mass with the outer edges clipped to +-8.
SimplePair<double> gaussian_pair(std::size_t cells = 2001, double shift = 1.0);

/// Bern(p0) against Bern(p1) on outcomes {"0", "1"}.
template <Scalar T>
SimplePair<T> bernoulli_pair(const T& p0, const T& p1) {
  return SimplePair<T>(DiscreteSpace<T>({"0", "1"}, {T(1) - p0, p0}), DiscreteSpace<T>({"0", "1"}, {T(1) - p1, p1}));
}

struct GaussianComparison {
  double alpha;
  double classical_critical_lr;  // LR at the level-alpha NP boundary
  double posthoc_threshold;      // 1/alpha: the log-optimal p rejects iff LR >= this
  bool threshold_consistent;     // every cell's rejection agrees with LR >= 1/alpha
  double classical_power;        // Q(r < c) + randomised boundary share
  double posthoc_power;          // Q(p* <= alpha)
  double reference_critical_lr;  // exp(z_{1-alpha} * shift - shift^2 / 2)
};

GaussianComparison compare_gaussian(const SimplePair<double>& pair, double alpha, double shift = 1.0);

}  // namespace posthoc
