#pragma once

// Finite probability spaces, evidence variables with the e <-> p reciprocal
// duality, test functions, piecewise-uniform p-value laws, and the classical
// and post-hoc validity checks.

#include "posthoc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace posthoc {

using OutcomeId = std::string;

/// For each id in `target`, the position of that id in `source`. Throws
/// unless both lists hold the same set of ids.
inline std::vector<std::size_t> align_outcomes(const std::vector<OutcomeId>& target,
                                               const std::vector<OutcomeId>& source) {
  std::vector<std::size_t> order(target.size());
  if (target == source) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return order;
  }
  if (target.size() != source.size())
    throw InvalidArgument("outcome sets differ in size (" + std::to_string(target.size()) + " vs " +
                          std::to_string(source.size()) + ")");
  std::unordered_map<std::string_view, std::size_t> where;
  for (std::size_t i = 0; i < source.size(); ++i) where.emplace(source[i], i);
  for (std::size_t i = 0; i < target.size(); ++i) {
    auto it = where.find(target[i]);
    if (it == where.end()) throw InvalidArgument("unknown outcome '" + target[i] + "'");
    order[i] = it->second;
  }
  return order;
}

template <Scalar T>
class DiscreteSpace {
public:
  DiscreteSpace(std::vector<OutcomeId> outcomes, std::vector<T> probs)
      : outcomes_(std::move(outcomes)), probs_(std::move(probs)) {
    if (outcomes_.empty()) throw InvalidArgument("DiscreteSpace: no outcomes");
    if (outcomes_.size() != probs_.size())
      throw InvalidArgument("DiscreteSpace: outcomes and probs differ in length");
    std::set<std::string_view> seen;
    T total(0);
    for (std::size_t i = 0; i < outcomes_.size(); ++i) {
      if (!seen.insert(outcomes_[i]).second)
        throw InvalidArgument("DiscreteSpace: duplicate outcome '" + outcomes_[i] + "'");
      if (probs_[i] < T(0))
        throw InvalidArgument("DiscreteSpace: negative probability at '" + outcomes_[i] + "'");
      total += probs_[i];
    }
    if (!nearly_equal(total, T(1)))
      throw InvalidArgument("DiscreteSpace: probabilities sum to " + format(total) + ", not 1");
  }

  const std::vector<OutcomeId>& outcomes() const { return outcomes_; }
  const std::vector<T>& probs() const { return probs_; }
  std::size_t size() const { return outcomes_.size(); }
  const T& prob(std::size_t i) const { return probs_.at(i); }

  std::optional<std::size_t> index_of(std::string_view id) const {
    for (std::size_t i = 0; i < outcomes_.size(); ++i)
      if (outcomes_[i] == id) return i;
    return std::nullopt;
  }

  /// Same distribution with outcomes listed in `order`.
  DiscreteSpace reordered(const std::vector<OutcomeId>& order) const {
    auto idx = align_outcomes(order, outcomes_);
    std::vector<T> p(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) p[i] = probs_[idx[i]];
    return DiscreteSpace(order, std::move(p));
  }

  friend bool operator==(const DiscreteSpace&, const DiscreteSpace&) = default;

private:
  std::vector<OutcomeId> outcomes_;
  std::vector<T> probs_;
};

/// A finite (possibly composite) null hypothesis. Expectations under it are
/// suprema over the members.
template <Scalar T>
class Hypothesis {
public:
  Hypothesis(DiscreteSpace<T> simple)  // NOLINT(google-explicit-constructor)
      : members_{std::move(simple)} {}

  explicit Hypothesis(std::vector<DiscreteSpace<T>> members) {
    if (members.empty()) throw InvalidArgument("Hypothesis: no members");
    const auto& order = members.front().outcomes();
    for (auto& m : members) members_.push_back(m.reordered(order));
  }

  const std::vector<DiscreteSpace<T>>& members() const { return members_; }
  const std::vector<OutcomeId>& outcomes() const { return members_.front().outcomes(); }
  std::size_t size() const { return members_.size(); }

  /// True if some member puts positive mass on outcome i.
  bool charges(std::size_t i) const {
    return std::any_of(members_.begin(), members_.end(),
                       [&](const DiscreteSpace<T>& m) { return m.prob(i) > T(0); });
  }

private:
  std::vector<DiscreteSpace<T>> members_;
};

enum class Scale { e_value, p_value };

inline const char* to_string(Scale s) { return s == Scale::e_value ? "e" : "p"; }

/// Per-outcome evidence in [0, inf] on either the e-scale (large is strong)
/// or the p-scale (small is strong).
template <Scalar T>
class EvidenceVariable {
public:
  EvidenceVariable(std::vector<OutcomeId> outcomes, std::vector<Extended<T>> values, Scale scale)
      : outcomes_(std::move(outcomes)), values_(std::move(values)), scale_(scale) {
    if (outcomes_.size() != values_.size())
      throw InvalidArgument("EvidenceVariable: outcomes and values differ in length");
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < outcomes_.size(); ++i) {
      if (!seen.insert(outcomes_[i]).second)
        throw InvalidArgument("EvidenceVariable: duplicate outcome '" + outcomes_[i] + "'");
      if (values_[i].is_finite() && values_[i].finite() < T(0))
        throw InvalidArgument("EvidenceVariable: negative value at '" + outcomes_[i] + "'");
    }
  }

  /// Constant evidence on the outcome set of `space`.
  static EvidenceVariable constant(const std::vector<OutcomeId>& outcomes, Extended<T> v, Scale scale) {
    return EvidenceVariable(outcomes, std::vector<Extended<T>>(outcomes.size(), v), scale);
  }

  const std::vector<OutcomeId>& outcomes() const { return outcomes_; }
  const std::vector<Extended<T>>& values() const { return values_; }
  Scale scale() const { return scale_; }
  std::size_t size() const { return values_.size(); }

  const Extended<T>& at(std::string_view id) const {
    for (std::size_t i = 0; i < outcomes_.size(); ++i)
      if (outcomes_[i] == id) return values_[i];
    throw InvalidArgument("unknown outcome '" + std::string(id) + "'");
  }

  /// Values on the requested scale, in this variable's outcome order.
  std::vector<Extended<T>> values_on(Scale s) const {
    if (s == scale_) return values_;
    std::vector<Extended<T>> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(v.reciprocal());
    return out;
  }

  /// Values on scale `s`, listed in the order of `order`.
  std::vector<Extended<T>> aligned(const std::vector<OutcomeId>& order, Scale s) const {
    auto idx = align_outcomes(order, outcomes_);
    auto vals = values_on(s);
    std::vector<Extended<T>> out(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) out[i] = vals[idx[i]];
    return out;
  }

  EvidenceVariable on_scale(Scale s) const { return EvidenceVariable(outcomes_, values_on(s), s); }

  friend bool operator==(const EvidenceVariable&, const EvidenceVariable&) = default;

private:
  std::vector<OutcomeId> outcomes_;
  std::vector<Extended<T>> values_;
  Scale scale_;
};

/// Reciprocal duality: 1/ev pointwise with the scale flipped. An involution.
template <Scalar T>
EvidenceVariable<T> dual(const EvidenceVariable<T>& ev) {
  Scale flipped = ev.scale() == Scale::e_value ? Scale::p_value : Scale::e_value;
  std::vector<Extended<T>> vals;
  vals.reserve(ev.size());
  for (const auto& v : ev.values()) vals.push_back(v.reciprocal());
  return EvidenceVariable<T>(ev.outcomes(), std::move(vals), flipped);
}

/// E_P[f] for f given in the outcome order of P; 0 * inf = 0.
template <Scalar T>
Extended<T> expectation(const DiscreteSpace<T>& P, std::span<const Extended<T>> f) {
  Extended<T> total(T(0));
  for (std::size_t i = 0; i < P.size(); ++i) total += Extended<T>(P.prob(i)) * f[i];
  return total;
}

/// Nondecreasing family of level-alpha tests alpha -> 1{p(x) <= alpha},
/// summarised by its jump point p(x) > 0.
template <Scalar T>
class TestFunction {
public:
  explicit TestFunction(EvidenceVariable<T> evidence) : p_(evidence.on_scale(Scale::p_value)) {
    for (std::size_t i = 0; i < p_.size(); ++i)
      if (p_.values()[i].is_zero())
        throw InvalidArgument("TestFunction: p-value 0 at '" + p_.outcomes()[i] + "'");
  }

  const EvidenceVariable<T>& p() const { return p_; }
  const std::vector<OutcomeId>& outcomes() const { return p_.outcomes(); }

  bool rejects(const Extended<T>& alpha, std::string_view x) const { return p_.at(x) <= alpha; }

private:
  EvidenceVariable<T> p_;
};

/// Smallest alpha at which `tf` rejects on outcome x.
template <Scalar T>
Extended<T> p_value(const TestFunction<T>& tf, std::string_view x) {
  return tf.p().at(x);
}

template <Scalar T>
struct Atom {
  Extended<T> location;
  T mass;
};

/// Uniform mass on the half-open interval (lower, upper].
template <Scalar T>
struct Piece {
  T lower;
  T upper;
  T mass;
};

/// Distribution of a p-value: point masses plus uniform-density pieces.
template <Scalar T>
class PValueLaw {
public:
  PValueLaw(std::vector<Atom<T>> atoms, std::vector<Piece<T>> pieces)
      : atoms_(std::move(atoms)), pieces_(std::move(pieces)) {
    T total(0);
    std::vector<Extended<T>> locs;
    for (const auto& a : atoms_) {
      if (a.mass < T(0)) throw InvalidArgument("PValueLaw: negative atom mass");
      if (a.location <= Extended<T>(T(0))) throw InvalidArgument("PValueLaw: atom location must be > 0");
      locs.push_back(a.location);
      total += a.mass;
    }
    std::sort(locs.begin(), locs.end());
    if (std::adjacent_find(locs.begin(), locs.end()) != locs.end())
      throw InvalidArgument("PValueLaw: duplicate atom location");
    for (const auto& p : pieces_) {
      if (p.mass < T(0)) throw InvalidArgument("PValueLaw: negative piece mass");
      if (p.lower < T(0) || !(p.lower < p.upper))
        throw InvalidArgument("PValueLaw: piece must satisfy 0 <= lower < upper");
      total += p.mass;
    }
    auto sorted = pieces_;
    std::sort(sorted.begin(), sorted.end(), [](const Piece<T>& a, const Piece<T>& b) { return a.lower < b.lower; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i].lower < sorted[i - 1].upper) throw InvalidArgument("PValueLaw: overlapping pieces");
    if (!nearly_equal(total, T(1)))
      throw InvalidArgument("PValueLaw: masses sum to " + format(total) + ", not 1");
  }

  static PValueLaw point(Extended<T> location) { return PValueLaw({{location, T(1)}}, {}); }
  static PValueLaw uniform(T upper = T(1)) { return PValueLaw({}, {{T(0), upper, T(1)}}); }

  const std::vector<Atom<T>>& atoms() const { return atoms_; }
  const std::vector<Piece<T>>& pieces() const { return pieces_; }

  /// P(p <= alpha). Atoms at +inf count only for alpha = +inf.
  T cdf(const Extended<T>& alpha) const {
    if (alpha.is_infinite()) return total_mass();
    const T& a = alpha.finite();
    T f(0);
    for (const auto& at : atoms_)
      if (at.location.is_finite() && at.location.finite() <= a) f += at.mass;
    for (const auto& p : pieces_) {
      if (a >= p.upper) f += p.mass;
      else if (a > p.lower) f += p.mass * (a - p.lower) / (p.upper - p.lower);
    }
    return f;
  }

  /// P(p < alpha).
  T cdf_left(const Extended<T>& alpha) const {
    T f(0);
    for (const auto& at : atoms_)
      if (at.location < alpha) f += at.mass;
    if (alpha.is_infinite()) {
      for (const auto& p : pieces_) f += p.mass;
      return f;
    }
    const T& a = alpha.finite();
    for (const auto& p : pieces_) {
      if (a >= p.upper) f += p.mass;
      else if (a > p.lower) f += p.mass * (a - p.lower) / (p.upper - p.lower);
    }
    return f;
  }

  /// P(lower < p <= upper).
  T mass_between(const Extended<T>& lower, const Extended<T>& upper) const {
    if (upper <= lower) return T(0);
    return cdf(upper) - cdf(lower);
  }

  T total_mass() const {
    T t(0);
    for (const auto& a : atoms_) t += a.mass;
    for (const auto& p : pieces_) t += p.mass;
    return t;
  }

  /// Finite positive points where the CDF changes slope or jumps.
  std::vector<T> breakpoints() const {
    std::vector<T> pts;
    for (const auto& a : atoms_)
      if (a.location.is_finite() && a.mass > T(0)) pts.push_back(a.location.finite());
    for (const auto& p : pieces_) {
      if (p.mass == T(0)) continue;
      if (p.lower > T(0)) pts.push_back(p.lower);
      pts.push_back(p.upper);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  /// Infimum of the support.
  Extended<T> essential_infimum() const {
    Extended<T> inf = Extended<T>::infinity();
    for (const auto& a : atoms_)
      if (a.mass > T(0)) inf = std::min(inf, a.location);
    for (const auto& p : pieces_)
      if (p.mass > T(0)) inf = std::min(inf, Extended<T>(p.lower));
    return inf;
  }

private:
  std::vector<Atom<T>> atoms_;
  std::vector<Piece<T>> pieces_;
};

/// Law of the p-scale values of `ev` under P. Zero-mass outcomes are dropped
/// and equal values are merged. Throws on positive mass at p = 0.
template <Scalar T>
PValueLaw<T> law_of(const EvidenceVariable<T>& ev, const DiscreteSpace<T>& P) {
  auto p = ev.aligned(P.outcomes(), Scale::p_value);
  std::map<Extended<T>, T> merged;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P.prob(i) == T(0)) continue;
    if (p[i].is_zero()) throw InvalidArgument("law_of: positive mass at p = 0 ('" + P.outcomes()[i] + "')");
    merged[p[i]] += P.prob(i);
  }
  std::vector<Atom<T>> atoms;
  for (auto& [loc, mass] : merged) atoms.push_back({loc, mass});
  return PValueLaw<T>(std::move(atoms), {});
}

template <Scalar T>
struct ValidityReport {
  Extended<T> statistic;
  bool valid = false;
  /// False when the statistic involved a transcendental step and was
  /// evaluated in floating point.
  bool exact = true;
  /// Classical check: the alpha attaining the supremum.
  std::optional<Extended<T>> witness_level;
  /// Composite hypotheses: the member attaining the supremum.
  std::optional<std::size_t> worst_member;
};

/// sup over 0 < alpha < cap of P(p <= alpha) / alpha. Between breakpoints
/// the CDF is affine, so the ratio is monotone there and the supremum is
/// attained at a breakpoint or approached at the cap from the left.
template <Scalar T>
ValidityReport<T> check_classical_validity(const PValueLaw<T>& law,
                                           const Extended<T>& cap = Extended<T>::infinity()) {
  ValidityReport<T> r{Extended<T>(T(0)), true, true, std::nullopt, std::nullopt};
  auto consider = [&](const Extended<T>& ratio, const T& x) {
    if (!r.witness_level || ratio > r.statistic) {
      r.statistic = ratio;
      r.witness_level = Extended<T>(x);
    }
  };
  for (const T& x : law.breakpoints())
    if (Extended<T>(x) < cap) consider(Extended<T>(law.cdf(Extended<T>(x)) / x), x);
  if (cap.is_finite()) consider(Extended<T>(law.cdf_left(cap) / cap.finite()), cap.finite());
  r.valid = at_most(r.statistic, T(1));
  return r;
}

/// Classical validity of the test function of `ev` under every member of H.
template <Scalar T>
ValidityReport<T> check_classical_validity(const EvidenceVariable<T>& ev, const Hypothesis<T>& H) {
  ValidityReport<T> worst{Extended<T>(T(0)), true, true, std::nullopt, std::nullopt};
  for (std::size_t m = 0; m < H.size(); ++m) {
    const auto& P = H.members()[m];
    auto p = ev.aligned(P.outcomes(), Scale::p_value);
    ValidityReport<T> r;
    bool zero_mass_at_zero = false;
    for (std::size_t i = 0; i < P.size(); ++i)
      if (P.prob(i) > T(0) && p[i].is_zero()) zero_mass_at_zero = true;
    if (zero_mass_at_zero) {
      r = {Extended<T>::infinity(), false, true, std::nullopt, std::nullopt};
    } else {
      r = check_classical_validity(law_of(ev, P));
    }
    if (m == 0 || r.statistic > worst.statistic) {
      worst = r;
      worst.worst_member = m;
    }
  }
  worst.valid = at_most(worst.statistic, T(1));
  return worst;
}

/// sup over H of E[1/p] (= E[e]); post-hoc valid iff at most 1.
template <Scalar T>
ValidityReport<T> check_posthoc_validity(const EvidenceVariable<T>& ev, const Hypothesis<T>& H) {
  ValidityReport<T> r{Extended<T>(T(0)), true, true, std::nullopt, std::nullopt};
  for (std::size_t m = 0; m < H.size(); ++m) {
    const auto& P = H.members()[m];
    auto e = ev.aligned(P.outcomes(), Scale::e_value);
    Extended<T> s = expectation<T>(P, e);
    if (m == 0 || s > r.statistic) {
      r.statistic = s;
      r.worst_member = m;
    }
  }
  r.valid = at_most(r.statistic, T(1));
  return r;
}

/// E[1/p] for a piecewise-uniform law. A piece (a, b] contributes
/// mass * log(b/a) / (b - a), which diverges for a = 0.
template <Scalar T>
ValidityReport<T> check_posthoc_validity(const PValueLaw<T>& law) {
  Extended<T> exact_part(T(0));
  for (const auto& a : law.atoms()) exact_part += Extended<T>(a.mass) * a.location.reciprocal();
  double log_part = 0;
  bool has_log = false;
  for (const auto& p : law.pieces()) {
    if (p.mass == T(0)) continue;
    if (p.lower == T(0)) return {Extended<T>::infinity(), false, true, std::nullopt, std::nullopt};
    has_log = true;
    log_part += to_double(p.mass) * std::log(to_double(p.upper) / to_double(p.lower)) /
                to_double(T(p.upper - p.lower));
  }
  if (!has_log) return {exact_part, at_most(exact_part, T(1)), true, std::nullopt, std::nullopt};
  if (exact_part.is_infinite()) return {exact_part, false, true, std::nullopt, std::nullopt};
  double total = exact_part.to_double() + log_part;
  Extended<T> stat(ScalarTraits<T>::from_double(total));
  return {stat, total <= 1.0 + kTolerance, false, std::nullopt, std::nullopt};
}

/// Finite totally ordered evidence space, elements indexed by rank with
/// rank 0 the bottom ("0") and the last rank the top ("inf").
class EvidenceLattice {
public:
  explicit EvidenceLattice(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() < 2) throw InvalidArgument("EvidenceLattice: need at least bottom and top");
  }
  static EvidenceLattice chain(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("d" + std::to_string(i));
    return EvidenceLattice(std::move(names));
  }

  std::size_t size() const { return names_.size(); }
  std::size_t bottom() const { return 0; }
  std::size_t top() const { return names_.size() - 1; }
  const std::string& name(std::size_t d) const { return names_.at(d); }

  std::size_t sup(std::span<const std::size_t> ds) const {
    std::size_t s = bottom();
    for (auto d : ds) s = std::max(s, d);
    return s;
  }

private:
  std::vector<std::string> names_;
};

/// Evidence on a lattice: one rank per outcome.
using LatticeEvidence = std::vector<std::size_t>;

/// A test family on a lattice: family[d] is the binary evidence variable
/// phi(d), taking values in {bottom, d} per outcome.
using LatticeTestFamily = std::vector<LatticeEvidence>;

/// The post-hoc evidence variable x -> sup_d phi(d)(x).
inline LatticeEvidence posthoc_evidence_of_family(const LatticeTestFamily& family, const EvidenceLattice& L) {
  if (family.size() != L.size()) throw InvalidArgument("test family must have one test per lattice element");
  const std::size_t n = family.front().size();
  LatticeEvidence eps(n, L.bottom());
  for (std::size_t d = 0; d < family.size(); ++d) {
    if (family[d].size() != n) throw InvalidArgument("test family members differ in outcome count");
    for (std::size_t x = 0; x < n; ++x) {
      const auto v = family[d][x];
      if (v != L.bottom() && v != d)
        throw InvalidArgument("phi(" + L.name(d) + ") takes value " + L.name(v) + " outside {bottom, d}");
      eps[x] = std::max(eps[x], v);
    }
  }
  return eps;
}

/// phi_eps(d) = d where d <= eps, bottom otherwise.
inline LatticeTestFamily test_family_of(const LatticeEvidence& eps, const EvidenceLattice& L) {
  LatticeTestFamily family(L.size(), LatticeEvidence(eps.size(), L.bottom()));
  for (std::size_t d = 0; d < L.size(); ++d)
    for (std::size_t x = 0; x < eps.size(); ++x)
      if (eps[x] >= L.size()) throw InvalidArgument("evidence rank outside the lattice");
      else if (d <= eps[x]) family[d][x] = d;
  return family;
}

}  // namespace posthoc
