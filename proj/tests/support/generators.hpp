#pragma once

// Seeded random instances for property tests.

#include "posthoc/calibration.hpp"
#include "posthoc/distortion.hpp"
#include "posthoc/merging.hpp"
#include "posthoc/optimal_design.hpp"
#include "posthoc/pfunctions.hpp"

#include <random>
#include <string>
#include <vector>

namespace gen {

using posthoc::Extended;
using posthoc::OutcomeId;
using posthoc::Rational;
using Rng = std::mt19937_64;

inline long uniform_int(Rng& rng, long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); }

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

inline std::vector<OutcomeId> outcomes(std::size_t n) {
  std::vector<OutcomeId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("o" + std::to_string(i));
  return ids;
}

/// n probabilities summing to 1 with denominators dividing the total weight.
/// Some entries may be zero when `allow_zero`.
inline std::vector<Rational> probabilities(Rng& rng, std::size_t n, bool allow_zero = true) {
  std::vector<long> w(n);
  long total = 0;
  for (auto& x : w) {
    x = uniform_int(rng, allow_zero ? 0 : 1, 12);
    total += x;
  }
  if (total == 0) {
    w[0] = 1;
    total = 1;
  }
  std::vector<Rational> p;
  for (auto x : w) p.emplace_back(x, total);
  return p;
}

/// A positive rational in (0, hi] with small denominator.
inline Rational positive(Rng& rng, long hi_num = 20, long den = 10) {
  return Rational(uniform_int(rng, 1, hi_num), uniform_int(rng, 1, den));
}

inline posthoc::DiscreteSpace<Rational> space(Rng& rng, std::size_t n, bool allow_zero = true) {
  return {outcomes(n), probabilities(rng, n, allow_zero)};
}

/// Evidence values in [0, inf] on the e-scale; zeros and infinities appear
/// with small probability.
inline std::vector<Extended<Rational>> e_values(Rng& rng, std::size_t n, double p_special = 0.1) {
  std::vector<Extended<Rational>> v;
  for (std::size_t i = 0; i < n; ++i) {
    if (coin(rng, p_special)) v.push_back(coin(rng) ? Extended<Rational>(Rational(0)) : Extended<Rational>::infinity());
    else v.emplace_back(Rational(uniform_int(rng, 0, 40), uniform_int(rng, 1, 10)));
  }
  return v;
}

inline posthoc::EvidenceVariable<Rational> e_variable(Rng& rng, std::size_t n, double p_special = 0.1) {
  return {outcomes(n), e_values(rng, n, p_special), posthoc::Scale::e_value};
}

/// Atoms only (all exact) or atoms plus pieces, with locations in (0, 3]
/// and occasionally at inf.
inline posthoc::PValueLaw<Rational> law(Rng& rng, bool with_pieces) {
  const std::size_t k = static_cast<std::size_t>(uniform_int(rng, 1, 5));
  std::vector<Rational> cuts;
  for (std::size_t i = 0; i < 2 * k; ++i) cuts.push_back(Rational(uniform_int(rng, 1, 300), 100));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const auto masses = probabilities(rng, cuts.size() + 1);
  std::vector<posthoc::Atom<Rational>> atoms;
  std::vector<posthoc::Piece<Rational>> pieces;
  std::size_t i = 0;
  for (; i + 1 < cuts.size(); i += 2) {
    if (with_pieces && coin(rng)) {
      const Rational lo = (i == 0 && coin(rng, 0.2)) ? Rational(0) : cuts[i];
      pieces.push_back({lo, cuts[i + 1], masses[i] + masses[i + 1]});
    } else {
      atoms.push_back({Extended<Rational>(cuts[i]), masses[i]});
      atoms.push_back({Extended<Rational>(cuts[i + 1]), masses[i + 1]});
    }
  }
  Rational rest(0);
  for (; i < masses.size(); ++i) rest += masses[i];
  if (cuts.size() % 2 == 1) {
    atoms.push_back({Extended<Rational>(cuts.back()), rest});
  } else if (rest > 0) {
    atoms.push_back({Extended<Rational>::infinity(), rest});
  }
  return {atoms, pieces};
}

/// Strictly increasing u-grid in (0, 1] ending at 1.
inline std::vector<Rational> u_grid(Rng& rng, std::size_t max_len) {
  std::vector<Rational> g;
  const long den = uniform_int(rng, 2, 24);
  for (long j = 1; j < den; ++j)
    if (coin(rng, 0.3)) g.emplace_back(j, den);
  g.emplace_back(1);
  if (g.size() > max_len) g.erase(g.begin(), g.end() - static_cast<long>(max_len));
  return g;
}

inline posthoc::PFunction<Rational> pfunction(Rng& rng, std::size_t n) {
  std::vector<std::vector<posthoc::PStep<Rational>>> steps(n);
  for (auto& s : steps) {
    Rational level(uniform_int(rng, 1, 10), 20);
    bool infinite = false;
    for (const auto& u : u_grid(rng, 8)) {
      if (!infinite && coin(rng, 0.4)) level += Rational(uniform_int(rng, 0, 10), 20);
      if (coin(rng, 0.05)) infinite = true;
      s.push_back({u, infinite ? Extended<Rational>::infinity() : Extended<Rational>(level)});
    }
  }
  return {outcomes(n), std::move(steps)};
}

inline posthoc::RandomizedTestFunction<Rational> test_function(Rng& rng, std::size_t n) {
  std::vector<std::vector<posthoc::TStep<Rational>>> steps(n);
  for (auto& s : steps) {
    Rational alpha(0);
    for (const auto& v : u_grid(rng, 6)) {
      if (coin(rng, 0.4)) continue;
      alpha += Rational(uniform_int(rng, s.empty() ? 0 : 1, 10), 20);
      if (!s.empty() && alpha == s.back().alpha) alpha += Rational(1, 20);
      s.push_back({alpha, v});
    }
  }
  return {outcomes(n), std::move(steps)};
}

}  // namespace gen
