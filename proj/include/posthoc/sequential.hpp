#pragma once

// Markov and Ville equalities, discrete-time nonnegative processes with
// bounded stopping rules, and post-hoc multiple-testing merges.

#include "posthoc/distortion.hpp"
#include "posthoc/evidence_core.hpp"
#include "posthoc/pfunctions.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace posthoc {

/// sup over candidate levels a in {1/X(x')} of 1{X(x) >= 1/a} / a, which
/// the deterministic identity says equals X(x).
template <Scalar T>
Extended<T> markov_inner_sup(const Extended<T>& x, const std::vector<Extended<T>>& candidates) {
  Extended<T> best(T(0));
  for (const auto& c : candidates)
    if (c <= x) best = std::max(best, c);
  return best;
}

template <Scalar T>
struct MarkovEquality {
  Extended<T> lhs;  // sup_H E[sup_a 1{X >= 1/a} / a]
  Extended<T> rhs;  // sup_H E[X]
  bool equal = false;
};

template <Scalar T>
MarkovEquality<T> markov_equality_check(const EvidenceVariable<T>& X, const Hypothesis<T>& H) {
  MarkovEquality<T> r{Extended<T>(T(0)), Extended<T>(T(0)), false};
  const auto candidates = X.values_on(Scale::e_value);
  for (std::size_t m = 0; m < H.size(); ++m) {
    const auto& P = H.members()[m];
    auto x = X.aligned(P.outcomes(), Scale::e_value);
    std::vector<Extended<T>> inner;
    for (const auto& v : x) inner.push_back(markov_inner_sup(v, candidates));
    const auto lhs = expectation<T>(P, inner);
    const auto rhs = expectation<T>(P, x);
    if (m == 0 || lhs > r.lhs) r.lhs = lhs;
    if (m == 0 || rhs > r.rhs) r.rhs = rhs;
  }
  if (r.lhs.is_infinite() || r.rhs.is_infinite()) r.equal = r.lhs == r.rhs;
  else r.equal = nearly_equal(r.lhs.finite(), r.rhs.finite());
  return r;
}

template <Scalar T>
struct MrmwSandwich {
  Extended<T> a;  // P(X >= 1/c)
  Extended<T> b;  // E[cX ∧ 1]
  Extended<T> r;  // c E[X]
  bool ordered = false;
};

/// a <= b <= r for every member; reported values are suprema over H.
template <Scalar T>
MrmwSandwich<T> mrmw_sandwich(const EvidenceVariable<T>& X, const T& c, const Hypothesis<T>& H) {
  if (!(c > T(0))) throw InvalidArgument("mrmw_sandwich: c must be > 0");
  MrmwSandwich<T> out{Extended<T>(T(0)), Extended<T>(T(0)), Extended<T>(T(0)), true};
  const Extended<T> cc(c);
  const Extended<T> threshold = cc.reciprocal();
  for (std::size_t m = 0; m < H.size(); ++m) {
    const auto& P = H.members()[m];
    auto x = X.aligned(P.outcomes(), Scale::e_value);
    std::vector<Extended<T>> hit, capped;
    for (const auto& v : x) {
      hit.emplace_back(threshold <= v ? T(1) : T(0));
      capped.push_back(std::min(cc * v, Extended<T>(T(1))));
    }
    const auto a = expectation<T>(P, hit);
    const auto b = expectation<T>(P, capped);
    const auto r = cc * expectation<T>(P, x);
    out.ordered = out.ordered && a <= b && b <= r;
    out.a = std::max(out.a, a);
    out.b = std::max(out.b, b);
    out.r = std::max(out.r, r);
  }
  return out;
}

/// Finite-support nonnegative multiplier Z.
struct IncrementLaw {
  std::vector<double> values;
  std::vector<double> probs;

  IncrementLaw(std::vector<double> v, std::vector<double> p);
  double mean() const;
  double sample(CounterRng& rng) const;
};

enum class ProcessClass { martingale, supermartingale, eprocess, unrestricted };

const char* to_string(ProcessClass c);
ProcessClass parse_process_class(std::string_view text);

/// M_0 >= 0 and M_t = M_{t-1} Z_t with i.i.d. Z_t, one increment law per
/// hypothesis member. Construction checks the declared class: martingale
/// needs E[Z] = 1, supermartingale and e-process need E[Z] <= 1 for every
/// member. `unrestricted` performs no check.
class ProcessModel {
public:
  ProcessModel(double m0, std::vector<IncrementLaw> members, ProcessClass cls, int horizon);

  double initial() const { return m0_; }
  const std::vector<IncrementLaw>& members() const { return members_; }
  ProcessClass process_class() const { return cls_; }
  int horizon() const { return horizon_; }

private:
  double m0_;
  std::vector<IncrementLaw> members_;
  ProcessClass cls_;
  int horizon_;
};

/// Decides from the prefix M_0..M_t whether to stop at t.
class StoppingRule {
public:
  using Predicate = std::function<bool(std::span<const double>)>;

  StoppingRule(std::string name, std::optional<int> cap, Predicate stop)
      : name_(std::move(name)), cap_(cap), stop_(std::move(stop)) {}

  /// tau = 0.
  static StoppingRule immediate();
  /// tau = t.
  static StoppingRule fixed(int t);
  /// First t with M_t >= level, capped.
  static StoppingRule hitting(double level, int cap);
  /// First t with M_t <= level, capped.
  static StoppingRule falling(double level, int cap);

  const std::string& name() const { return name_; }
  const std::optional<int>& cap() const { return cap_; }
  bool bounded() const { return cap_.has_value(); }

  /// tau for a full path M_0..M_T; never looks past the prefix it decides on.
  int stopping_time(std::span<const double> path) const;

private:
  std::string name_;
  std::optional<int> cap_;
  Predicate stop_;
};

/// n paths of length T + 1, row-major.
struct PathCollection {
  std::size_t n = 0;
  int horizon = 0;
  std::vector<double> values;

  std::span<const double> path(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(horizon + 1), static_cast<std::size_t>(horizon + 1)};
  }
};

/// Path i uses stream i of `seed`; `member` picks the increment law.
PathCollection simulate_paths(const ProcessModel& model, std::size_t n, std::uint64_t seed, std::size_t member = 0);

/// Writes path_id,t,M_t rows.
std::string paths_csv(const PathCollection& paths);

struct VilleReport {
  std::string rule;
  ProcessClass process_class;
  double initial = 0;
  double mean = 0;  // sup over members of the MC mean of M_tau
  double standard_error = 0;
  std::size_t worst_member = 0;
  std::uint64_t n = 0;
  /// Per path, sup_a 1{M_tau >= 1/a} / a equals M_tau.
  bool identity_holds = true;
  /// Martingale: |mean - M_0| <= 3 SE. Supermartingale and e-process:
  /// mean <= M_0 + 3 SE, with equality when tau = 0. Unrestricted: same
  /// bound as supermartingale, so violations show up as failures.
  bool pass = false;
};

VilleReport ville_equality_check(const ProcessModel& model, const StoppingRule& rule, std::uint64_t n,
                                 std::uint64_t seed, unsigned workers = default_workers());

struct AnytimeCell {
  std::size_t member;
  std::string rule;
  double mean;
  double standard_error;
  bool within;  // mean <= 1 + 3 SE
};

struct AnytimeReport {
  std::vector<AnytimeCell> cells;
  double sup_mean = 0;
  bool valid = false;
};

/// Estimates sup over rules and members of E[M_tau] (= E[1/p_tau]).
AnytimeReport anytime_validity_check(const std::vector<PathCollection>& paths_per_member,
                                     const std::vector<StoppingRule>& rules);

template <Scalar T>
struct TestFamilyCollection {
  explicit TestFamilyCollection(std::vector<TestFunction<T>> m, std::vector<T> w = {})
      : members(std::move(m)), weights(std::move(w)) {
    if (members.empty()) throw InvalidArgument("TestFamilyCollection: empty family");
    for (const auto& tf : members) align_outcomes(members.front().outcomes(), tf.outcomes());
  }
  std::vector<TestFunction<T>> members;
  std::vector<T> weights;  // empty means uniform
};

/// phi_bar(alpha) = max_i phi_i(alpha), so p_bar = min_i p_i.
template <Scalar T>
TestFunction<T> fwer_merge(const TestFamilyCollection<T>& fam) {
  const auto& order = fam.members.front().outcomes();
  std::vector<Extended<T>> p = fam.members.front().p().aligned(order, Scale::p_value);
  for (const auto& tf : fam.members) {
    auto pi = tf.p().aligned(order, Scale::p_value);
    for (std::size_t x = 0; x < order.size(); ++x) p[x] = std::min(p[x], pi[x]);
  }
  return TestFunction<T>(EvidenceVariable<T>(order, std::move(p), Scale::p_value));
}

/// phi~(alpha) = sum_i w_i 1{p_i <= alpha} per outcome.
template <Scalar T>
RandomizedTestFunction<T> fdr_average(const TestFamilyCollection<T>& fam, std::vector<T> weights = {}) {
  const std::size_t k = fam.members.size();
  if (weights.empty()) weights = fam.weights;
  if (weights.empty()) weights.assign(k, T(1) / T(static_cast<long>(k)));
  if (weights.size() != k) throw InvalidArgument("fdr_average: one weight per member required");
  T total(0);
  for (const auto& w : weights) {
    if (w < T(0)) throw InvalidArgument("fdr_average: negative weight");
    total += w;
  }
  if (!nearly_equal(total, T(1))) throw InvalidArgument("fdr_average: weights must sum to 1");
  const auto& order = fam.members.front().outcomes();
  std::vector<std::vector<Extended<T>>> p;
  for (const auto& tf : fam.members) p.push_back(tf.p().aligned(order, Scale::p_value));
  std::vector<std::vector<TStep<T>>> steps(order.size());
  for (std::size_t x = 0; x < order.size(); ++x) {
    std::map<T, T> jumps;
    for (std::size_t i = 0; i < k; ++i)
      if (p[i][x].is_finite()) jumps[p[i][x].finite()] += weights[i];
    T acc(0);
    for (const auto& [alpha, w] : jumps) {
      acc += w;
      steps[x].push_back({alpha, std::min(acc, T(1))});
    }
  }
  return RandomizedTestFunction<T>(order, std::move(steps));
}

}  // namespace posthoc
