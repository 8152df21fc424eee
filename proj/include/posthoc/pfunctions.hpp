#pragma once

// Randomized test functions and p-functions as finite step functions, the
// Galois conversions between them, and post-hoc validity of p-functions.

#include "posthoc/evidence_core.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace posthoc {

/// p~(u) = level for u in (previous u, u].
template <Scalar T>
struct PStep {
  T u;
  Extended<T> level;
  friend bool operator==(const PStep&, const PStep&) = default;
};

/// tf(alpha) = value for alpha in [alpha, next alpha).
template <Scalar T>
struct TStep {
  T alpha;
  T value;
  friend bool operator==(const TStep&, const TStep&) = default;
};

/// Per-outcome nondecreasing, left-continuous step function on (0, 1].
/// Stored in canonical form: u strictly increasing ending at 1, levels
/// strictly increasing (adjacent equal levels are merged).
template <Scalar T>
class PFunction {
public:
  PFunction(std::vector<OutcomeId> outcomes, std::vector<std::vector<PStep<T>>> steps)
      : outcomes_(std::move(outcomes)), steps_(std::move(steps)) {
    if (outcomes_.size() != steps_.size()) throw InvalidArgument("PFunction: outcomes and step lists differ in length");
    for (std::size_t x = 0; x < steps_.size(); ++x) {
      auto& s = steps_[x];
      const std::string where = " (outcome '" + outcomes_[x] + "')";
      if (s.empty()) throw InvalidArgument("PFunction: empty step list" + where);
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (!(s[k].u > T(0)) || s[k].u > T(1)) throw InvalidArgument("PFunction: u outside (0, 1]" + where);
        if (k > 0 && !(s[k - 1].u < s[k].u)) throw InvalidArgument("PFunction: u not increasing" + where);
        if (k > 0 && s[k].level < s[k - 1].level) throw InvalidArgument("PFunction: levels decreasing" + where);
      }
      if (s.back().u != T(1)) throw InvalidArgument("PFunction: last step must end at u = 1" + where);
      std::vector<PStep<T>> canon;
      for (const auto& st : s) {
        if (!canon.empty() && canon.back().level == st.level) canon.back().u = st.u;
        else canon.push_back(st);
      }
      s = std::move(canon);
    }
  }

  /// Non-randomized p-function p~(u) = p(x).
  static PFunction constant(const EvidenceVariable<T>& ev) {
    auto p = ev.values_on(Scale::p_value);
    std::vector<std::vector<PStep<T>>> steps;
    for (const auto& v : p) steps.push_back({{T(1), v}});
    return PFunction(ev.outcomes(), std::move(steps));
  }

  /// Step function on the grid 0 < u_1 < ... < u_m = 1 taking f(x, u_j) on
  /// (u_{j-1}, u_j].
  static PFunction tabulate(const std::vector<OutcomeId>& outcomes, const std::vector<T>& grid,
                            const std::function<Extended<T>(std::size_t, const T&)>& f) {
    std::vector<std::vector<PStep<T>>> steps(outcomes.size());
    for (std::size_t x = 0; x < outcomes.size(); ++x)
      for (const auto& u : grid) steps[x].push_back({u, f(x, u)});
    return PFunction(outcomes, std::move(steps));
  }

  const std::vector<OutcomeId>& outcomes() const { return outcomes_; }
  const std::vector<std::vector<PStep<T>>>& steps() const { return steps_; }
  const std::vector<PStep<T>>& steps(std::size_t x) const { return steps_.at(x); }
  std::size_t size() const { return outcomes_.size(); }

  Extended<T> eval(std::size_t x, const T& u) const {
    if (!(u > T(0)) || u > T(1)) throw InvalidArgument("PFunction: u outside (0, 1]");
    for (const auto& s : steps_.at(x))
      if (u <= s.u) return s.level;
    return steps_[x].back().level;
  }

  bool is_randomized(std::size_t x) const { return steps_.at(x).size() > 1; }
  bool is_randomized() const {
    for (std::size_t x = 0; x < size(); ++x)
      if (is_randomized(x)) return true;
    return false;
  }

  /// Union of all u-breakpoints over all outcomes.
  std::vector<T> breakpoints() const {
    std::vector<T> u;
    for (const auto& s : steps_)
      for (const auto& st : s) u.push_back(st.u);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  }

  friend bool operator==(const PFunction&, const PFunction&) = default;

private:
  std::vector<OutcomeId> outcomes_;
  std::vector<std::vector<PStep<T>>> steps_;
};

/// Per-outcome nondecreasing, right-continuous step function of alpha > 0
/// with values in [0, 1]; zero before the first step. Canonical form:
/// alphas strictly increasing, values strictly increasing and positive.
template <Scalar T>
class RandomizedTestFunction {
public:
  RandomizedTestFunction(std::vector<OutcomeId> outcomes, std::vector<std::vector<TStep<T>>> steps)
      : outcomes_(std::move(outcomes)), steps_(std::move(steps)) {
    if (outcomes_.size() != steps_.size())
      throw InvalidArgument("RandomizedTestFunction: outcomes and step lists differ in length");
    for (std::size_t x = 0; x < steps_.size(); ++x) {
      auto& s = steps_[x];
      const std::string where = " (outcome '" + outcomes_[x] + "')";
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k].alpha < T(0)) throw InvalidArgument("RandomizedTestFunction: negative alpha" + where);
        if (s[k].value < T(0) || s[k].value > T(1))
          throw InvalidArgument("RandomizedTestFunction: value outside [0, 1]" + where);
        if (k > 0 && !(s[k - 1].alpha < s[k].alpha))
          throw InvalidArgument("RandomizedTestFunction: alpha not increasing" + where);
        if (k > 0 && s[k].value < s[k - 1].value)
          throw InvalidArgument("RandomizedTestFunction: values decreasing" + where);
      }
      std::vector<TStep<T>> canon;
      for (const auto& st : s) {
        const T prev = canon.empty() ? T(0) : canon.back().value;
        if (st.value > prev) canon.push_back(st);
      }
      s = std::move(canon);
    }
  }

  /// alpha -> 1{p <= alpha}.
  static RandomizedTestFunction indicator(const EvidenceVariable<T>& ev) {
    auto p = ev.values_on(Scale::p_value);
    std::vector<std::vector<TStep<T>>> steps(p.size());
    for (std::size_t x = 0; x < p.size(); ++x)
      if (p[x].is_finite()) steps[x].push_back({p[x].finite(), T(1)});
    return RandomizedTestFunction(ev.outcomes(), std::move(steps));
  }

  const std::vector<OutcomeId>& outcomes() const { return outcomes_; }
  const std::vector<std::vector<TStep<T>>>& steps() const { return steps_; }
  const std::vector<TStep<T>>& steps(std::size_t x) const { return steps_.at(x); }
  std::size_t size() const { return outcomes_.size(); }

  T eval(std::size_t x, const Extended<T>& alpha) const {
    T v(0);
    for (const auto& s : steps_.at(x))
      if (Extended<T>(s.alpha) <= alpha) v = s.value;
    return v;
  }

  friend bool operator==(const RandomizedTestFunction&, const RandomizedTestFunction&) = default;

private:
  std::vector<OutcomeId> outcomes_;
  std::vector<std::vector<TStep<T>>> steps_;
};

/// p~(u) = inf{alpha : tf(alpha) >= u}.
template <Scalar T>
PFunction<T> pfunction_of(const RandomizedTestFunction<T>& tf) {
  std::vector<std::vector<PStep<T>>> steps(tf.size());
  for (std::size_t x = 0; x < tf.size(); ++x) {
    for (const auto& s : tf.steps(x)) steps[x].push_back({s.value, Extended<T>(s.alpha)});
    if (steps[x].empty() || steps[x].back().u < T(1)) steps[x].push_back({T(1), Extended<T>::infinity()});
  }
  return PFunction<T>(tf.outcomes(), std::move(steps));
}

/// tf(alpha) = sup{u : p~(u) <= alpha}.
template <Scalar T>
RandomizedTestFunction<T> test_function_of(const PFunction<T>& pf) {
  std::vector<std::vector<TStep<T>>> steps(pf.size());
  for (std::size_t x = 0; x < pf.size(); ++x)
    for (const auto& s : pf.steps(x))
      if (s.level.is_finite()) steps[x].push_back({s.level.finite(), s.u});
  return RandomizedTestFunction<T>(pf.outcomes(), std::move(steps));
}

/// sup_u u / p~(x, u), attained at a step's right end; u/inf = 0, u/0 = inf.
template <Scalar T>
Extended<T> pfunction_sup_ratio(const PFunction<T>& pf, std::size_t x) {
  Extended<T> best(T(0));
  for (const auto& s : pf.steps(x)) best = std::max(best, Extended<T>(s.u) * s.level.reciprocal());
  return best;
}

/// sup over H of E[sup_u u / p~(u)].
template <Scalar T>
ValidityReport<T> check_pfunction_posthoc(const PFunction<T>& pf, const Hypothesis<T>& H) {
  std::vector<Extended<T>> ratio(pf.size());
  for (std::size_t x = 0; x < pf.size(); ++x) ratio[x] = pfunction_sup_ratio(pf, x);
  EvidenceVariable<T> stat(pf.outcomes(), std::move(ratio), Scale::e_value);
  return check_posthoc_validity(stat, H);
}

/// sup over H of E[sup_alpha tf(alpha) / alpha].
template <Scalar T>
ValidityReport<T> check_test_function_posthoc(const RandomizedTestFunction<T>& tf, const Hypothesis<T>& H) {
  std::vector<Extended<T>> ratio(tf.size());
  for (std::size_t x = 0; x < tf.size(); ++x) {
    Extended<T> best(T(0));
    for (const auto& s : tf.steps(x)) best = std::max(best, Extended<T>(s.value) * Extended<T>(s.alpha).reciprocal());
    ratio[x] = best;
  }
  EvidenceVariable<T> stat(tf.outcomes(), std::move(ratio), Scale::e_value);
  return check_posthoc_validity(stat, H);
}

/// 1/m, 2/m, ..., 1.
template <Scalar T>
std::vector<T> uniform_grid(std::size_t m) {
  if (m == 0) throw InvalidArgument("grid size must be >= 1");
  std::vector<T> g;
  for (std::size_t j = 1; j <= m; ++j) g.push_back(T(static_cast<long>(j)) / T(static_cast<long>(m)));
  return g;
}

/// p~(u) = u p, tabulated on `grid` with the value at each cell's right end
/// so that sup_u u / p~(u) = 1/p exactly.
template <Scalar T>
PFunction<T> uniform_randomize(const EvidenceVariable<T>& p_ev, const std::vector<T>& grid = uniform_grid<T>(100)) {
  auto p = p_ev.values_on(Scale::p_value);
  return PFunction<T>::tabulate(p_ev.outcomes(), grid,
                                [&](std::size_t x, const T& u) { return Extended<T>(u) * p[x]; });
}

/// tf(alpha) = alpha e ∧ 1, tabulated from below: tf = u_j on [u_j / e, u_{j+1} / e).
/// Its post-hoc statistic is exactly E[e].
template <Scalar T>
RandomizedTestFunction<T> soft_test_function(const EvidenceVariable<T>& e_ev,
                                             const std::vector<T>& grid = uniform_grid<T>(100)) {
  auto e = e_ev.values_on(Scale::e_value);
  std::vector<std::vector<TStep<T>>> steps(e.size());
  for (std::size_t x = 0; x < e.size(); ++x) {
    if (e[x].is_zero()) continue;
    if (e[x].is_infinite()) {
      steps[x].push_back({T(0), T(1)});
      continue;
    }
    for (const auto& u : grid) steps[x].push_back({u / e[x].finite(), u});
  }
  return RandomizedTestFunction<T>(e_ev.outcomes(), std::move(steps));
}

/// tf(alpha) >= u <=> pf(u) <= alpha for every outcome, alpha ranging over
/// both functions' finite levels and u over both functions' u-values.
template <Scalar T>
bool galois_adjunction_holds(const RandomizedTestFunction<T>& tf, const PFunction<T>& pf) {
  auto idx = align_outcomes(tf.outcomes(), pf.outcomes());
  for (std::size_t x = 0; x < tf.size(); ++x) {
    std::vector<Extended<T>> alphas;
    std::vector<T> us;
    for (const auto& s : tf.steps(x)) {
      alphas.emplace_back(s.alpha);
      us.push_back(s.value);
    }
    for (const auto& s : pf.steps(idx[x])) {
      if (s.level.is_finite()) alphas.push_back(s.level);
      us.push_back(s.u);
    }
    std::sort(alphas.begin(), alphas.end());
    alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());
    std::vector<T> tf_at;
    for (const auto& a : alphas) tf_at.push_back(tf.eval(x, a));
    std::vector<Extended<T>> pf_at;
    for (const auto& u : us) pf_at.push_back(u > T(0) ? pf.eval(idx[x], u) : Extended<T>());
    for (std::size_t i = 0; i < alphas.size(); ++i)
      for (std::size_t j = 0; j < us.size(); ++j)
        if (us[j] > T(0) && (tf_at[i] >= us[j]) != (pf_at[j] <= alphas[i])) return false;
  }
  return true;
}

/// p~(1) per outcome.
template <Scalar T>
EvidenceVariable<T> p_value_head(const PFunction<T>& pf) {
  std::vector<Extended<T>> v;
  for (std::size_t x = 0; x < pf.size(); ++x) v.push_back(pf.steps(x).back().level);
  return EvidenceVariable<T>(pf.outcomes(), std::move(v), Scale::p_value);
}

}  // namespace posthoc
