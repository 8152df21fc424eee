#pragma once

// Merging rules for post-hoc p-values, e-values and p-functions.

#include "posthoc/evidence_core.hpp"
#include "posthoc/pfunctions.hpp"

#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace posthoc {

/// Outcome ids of a product space are the component ids joined by '|'.
inline OutcomeId product_id(const std::vector<const OutcomeId*>& parts) {
  std::string id;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) id += '|';
    id += *parts[i];
  }
  return id;
}

/// Calls f(indices) for every tuple of the cartesian product, last index
/// varying fastest.
inline void for_each_tuple(const std::vector<std::size_t>& sizes,
                           const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> idx(sizes.size(), 0);
  for (auto s : sizes)
    if (s == 0) return;
  while (true) {
    f(idx);
    std::size_t k = sizes.size();
    while (k > 0) {
      --k;
      if (++idx[k] < sizes[k]) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (sizes.empty()) return;
  }
}

/// Independent product of spaces.
template <Scalar T>
DiscreteSpace<T> product_space(const std::vector<DiscreteSpace<T>>& spaces) {
  if (spaces.empty()) throw InvalidArgument("product_space: no components");
  std::vector<std::size_t> sizes;
  for (const auto& s : spaces) sizes.push_back(s.size());
  std::vector<OutcomeId> ids;
  std::vector<T> probs;
  for_each_tuple(sizes, [&](const std::vector<std::size_t>& idx) {
    std::vector<const OutcomeId*> parts;
    T p(1);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      parts.push_back(&spaces[i].outcomes()[idx[i]]);
      p *= spaces[i].prob(idx[i]);
    }
    ids.push_back(product_id(parts));
    probs.push_back(p);
  });
  return DiscreteSpace<T>(std::move(ids), std::move(probs));
}

/// Product hypothesis: every combination of component members.
template <Scalar T>
Hypothesis<T> product_hypothesis(const std::vector<Hypothesis<T>>& components) {
  std::vector<std::size_t> sizes;
  for (const auto& h : components) sizes.push_back(h.size());
  std::vector<DiscreteSpace<T>> members;
  for_each_tuple(sizes, [&](const std::vector<std::size_t>& idx) {
    std::vector<DiscreteSpace<T>> parts;
    for (std::size_t i = 0; i < idx.size(); ++i) parts.push_back(components[i].members()[idx[i]]);
    members.push_back(product_space(parts));
  });
  return Hypothesis<T>(std::move(members));
}

template <Scalar T>
struct ProductComponent {
  EvidenceVariable<T> evidence;
  Hypothesis<T> hypothesis;
};

template <Scalar T>
struct ProductMerge {
  Hypothesis<T> hypothesis;
  EvidenceVariable<T> evidence;
};

/// Pointwise product of e-values (equivalently of p-values) over the
/// independent product of the component hypotheses. A zero e-value times an
/// infinite one is 0. The result keeps the first component's scale.
template <Scalar T>
ProductMerge<T> merge_product_independent(const std::vector<ProductComponent<T>>& comps) {
  if (comps.empty()) throw InvalidArgument("merge_product_independent: no components");
  std::vector<Hypothesis<T>> hyps;
  std::vector<std::vector<Extended<T>>> e;
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    try {
      e.push_back(c.evidence.aligned(c.hypothesis.outcomes(), Scale::e_value));
    } catch (const InvalidArgument& err) {
      throw InvalidArgument("merge_product_independent: component " + std::to_string(i) +
                            " does not live on its declared space: " + err.what());
    }
    hyps.push_back(c.hypothesis);
    sizes.push_back(c.hypothesis.outcomes().size());
  }
  Hypothesis<T> H = product_hypothesis(hyps);
  std::vector<Extended<T>> vals;
  for_each_tuple(sizes, [&](const std::vector<std::size_t>& idx) {
    Extended<T> v(T(1));
    for (std::size_t i = 0; i < idx.size(); ++i) v *= e[i][idx[i]];
    vals.push_back(v);
  });
  EvidenceVariable<T> merged(H.outcomes(), std::move(vals), Scale::e_value);
  return {H, merged.on_scale(comps.front().evidence.scale())};
}

template <Scalar T>
void check_weights(const std::vector<T>& w, std::size_t n) {
  if (w.size() != n) throw InvalidArgument("weights: expected " + std::to_string(n) + " weights");
  T total(0);
  for (const auto& x : w) {
    if (x < T(0)) throw InvalidArgument("weights must be nonnegative");
    total += x;
  }
  if (!nearly_equal(total, T(1))) throw InvalidArgument("weights sum to " + format(total) + ", not 1");
}

/// p = (sum_i w_i / p_i)^{-1}, i.e. the weighted average of the e-values.
template <Scalar T>
EvidenceVariable<T> merge_harmonic(const std::vector<EvidenceVariable<T>>& evs, const std::vector<T>& weights) {
  if (evs.empty()) throw InvalidArgument("merge_harmonic: no inputs");
  check_weights(weights, evs.size());
  const auto& order = evs.front().outcomes();
  std::vector<Extended<T>> e(order.size(), Extended<T>(T(0)));
  for (std::size_t i = 0; i < evs.size(); ++i) {
    auto ei = evs[i].aligned(order, Scale::e_value);
    for (std::size_t x = 0; x < order.size(); ++x) e[x] += Extended<T>(weights[i]) * ei[x];
  }
  return EvidenceVariable<T>(order, std::move(e), Scale::e_value).on_scale(Scale::p_value);
}

/// Pointwise product of e-values on a common space (no independence needed
/// for geometric validity).
template <Scalar T>
EvidenceVariable<T> merge_geometric(const std::vector<EvidenceVariable<T>>& evs) {
  if (evs.empty()) throw InvalidArgument("merge_geometric: no inputs");
  const auto& order = evs.front().outcomes();
  std::vector<Extended<T>> e(order.size(), Extended<T>(T(1)));
  for (const auto& ev : evs) {
    auto ei = ev.aligned(order, Scale::e_value);
    for (std::size_t x = 0; x < order.size(); ++x) e[x] *= ei[x];
  }
  return EvidenceVariable<T>(order, std::move(e), Scale::e_value);
}

/// Pointwise-in-u weighted harmonic mean on the union of the inputs' breakpoints.
template <Scalar T>
PFunction<T> merge_pfunctions_harmonic(const std::vector<PFunction<T>>& pfs, const std::vector<T>& weights) {
  if (pfs.empty()) throw InvalidArgument("merge_pfunctions_harmonic: no inputs");
  check_weights(weights, pfs.size());
  const auto& order = pfs.front().outcomes();
  std::vector<std::vector<std::size_t>> idx;
  std::vector<T> grid;
  for (const auto& pf : pfs) {
    idx.push_back(align_outcomes(order, pf.outcomes()));
    for (const auto& u : pf.breakpoints()) grid.push_back(u);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return PFunction<T>::tabulate(order, grid, [&](std::size_t x, const T& u) {
    Extended<T> e(T(0));
    for (std::size_t i = 0; i < pfs.size(); ++i) e += Extended<T>(weights[i]) * pfs[i].eval(idx[i][x], u).reciprocal();
    return e.reciprocal();
  });
}

/// p~_i(1) / p~_i(u) with inf/inf = 0/0 = 1.
template <Scalar T>
Extended<T> head_ratio(const PFunction<T>& pf, std::size_t x, const T& u) {
  const Extended<T> head = pf.steps(x).back().level;
  const Extended<T> at = pf.eval(x, u);
  if (head == at) return Extended<T>(T(1));
  return head / at;
}

template <Scalar T>
struct ShapeCheck {
  bool holds;
  /// u maximising u * prod_i max_x ratio_i(x, u), and that value.
  T witness_u;
  Extended<T> worst;
};

/// The joint condition prod_i p~_i(1)/p~_i(u) <= 1/u for all u in (0, 1] and
/// every outcome tuple. Each ratio is constant between union breakpoints and
/// 1/u is smallest at a cell's right end, so the breakpoints suffice.
template <Scalar T>
ShapeCheck<T> product_shape_condition(const std::vector<PFunction<T>>& pfs) {
  std::vector<T> grid;
  for (const auto& pf : pfs)
    for (const auto& u : pf.breakpoints()) grid.push_back(u);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  ShapeCheck<T> r{true, T(1), Extended<T>(T(0))};
  bool first = true;
  for (const auto& u : grid) {
    Extended<T> v(u);
    for (const auto& pf : pfs) {
      Extended<T> m(T(0));
      for (std::size_t x = 0; x < pf.size(); ++x) m = std::max(m, head_ratio(pf, x, u));
      v *= m;
    }
    if (first || v > r.worst) {
      r.worst = v;
      r.witness_u = u;
      first = false;
    }
  }
  r.holds = at_most(r.worst, T(1));
  return r;
}

/// Pointwise product of independent p-functions on the product space.
/// Throws if the joint shape condition fails, naming the witness u.
template <Scalar T>
PFunction<T> merge_pfunctions_product(const std::vector<PFunction<T>>& pfs) {
  if (pfs.empty()) throw InvalidArgument("merge_pfunctions_product: no inputs");
  auto shape = product_shape_condition(pfs);
  if (!shape.holds)
    throw InvalidArgument("merge_pfunctions_product: shape condition fails at u = " + format(shape.witness_u) +
                          " (u * prod ratio = " + shape.worst.str() + ")");
  std::vector<T> grid;
  std::vector<std::size_t> sizes;
  for (const auto& pf : pfs) {
    for (const auto& u : pf.breakpoints()) grid.push_back(u);
    sizes.push_back(pf.size());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<OutcomeId> ids;
  std::vector<std::vector<PStep<T>>> steps;
  for_each_tuple(sizes, [&](const std::vector<std::size_t>& idx) {
    std::vector<const OutcomeId*> parts;
    for (std::size_t i = 0; i < idx.size(); ++i) parts.push_back(&pfs[i].outcomes()[idx[i]]);
    ids.push_back(product_id(parts));
    std::vector<PStep<T>> s;
    for (const auto& u : grid) {
      Extended<T> e(T(1));
      for (std::size_t i = 0; i < idx.size(); ++i) e *= pfs[i].eval(idx[i], u).reciprocal();
      s.push_back({u, e.reciprocal()});
    }
    steps.push_back(std::move(s));
  });
  return PFunction<T>(std::move(ids), std::move(steps));
}

/// Post-hoc statistic of the n-fold i.i.d. product of `pf` under P:
/// E[sup_u u prod_i 1/p~(X_i, u)], enumerated over multisets of outcomes.
template <Scalar T>
Extended<T> iid_product_statistic(const PFunction<T>& pf, const DiscreteSpace<T>& P, std::size_t n) {
  auto idx = align_outcomes(P.outcomes(), pf.outcomes());
  std::vector<std::size_t> support;
  for (std::size_t x = 0; x < P.size(); ++x)
    if (P.prob(x) > T(0)) support.push_back(x);
  const auto grid = pf.breakpoints();
  std::vector<std::vector<Extended<T>>> inv(P.size());  // inv[x][k] = 1 / p~(x, u_k)
  for (auto x : support)
    for (const auto& u : grid) inv[x].push_back(pf.eval(idx[x], u).reciprocal());

  std::vector<T> fact(n + 1, T(1));
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * T(static_cast<long>(i));

  Extended<T> total(T(0));
  std::vector<std::size_t> counts(support.size(), 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == support.size()) {
      counts[pos] = left;
      T weight = fact[n];
      for (std::size_t j = 0; j < support.size(); ++j) {
        weight /= fact[counts[j]];
        for (std::size_t c = 0; c < counts[j]; ++c) weight *= P.prob(support[j]);
      }
      Extended<T> best(T(0));
      for (std::size_t k = 0; k < grid.size(); ++k) {
        Extended<T> v(grid[k]);
        for (std::size_t j = 0; j < support.size(); ++j)
          for (std::size_t c = 0; c < counts[j]; ++c) v *= inv[support[j]][k];
        best = std::max(best, v);
      }
      total += Extended<T>(weight) * best;
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  if (!support.empty()) rec(0, n);
  return total;
}

/// Smallest n whose n-fold i.i.d. product of a randomized p-function has a
/// post-hoc statistic above 1.
template <Scalar T>
std::size_t product_merge_failure_witness(const PFunction<T>& pf, const DiscreteSpace<T>& P,
                                          std::size_t max_n = 32) {
  auto idx = align_outcomes(P.outcomes(), pf.outcomes());
  bool randomized = false;
  for (std::size_t x = 0; x < P.size(); ++x)
    if (P.prob(x) > T(0) && pf.is_randomized(idx[x])) randomized = true;
  if (!randomized) throw InvalidArgument("product_merge_failure_witness: p-function is not randomized");
  for (std::size_t n = 1; n <= max_n; ++n)
    if (!at_most(iid_product_statistic(pf, P, n), T(1))) return n;
  throw Error("product_merge_failure_witness: statistic stays <= 1 up to n = " + std::to_string(max_n));
}

}  // namespace posthoc
