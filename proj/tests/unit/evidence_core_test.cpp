#include "posthoc/evidence_core.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

using namespace posthoc;
using R = Rational;
using E = Extended<R>;

namespace {

DiscreteSpace<R> coin(R heads) { return DiscreteSpace<R>({"h", "t"}, {heads, R(1) - heads}); }

}  // namespace

TEST(DiscreteSpace, ValidatesInput) {
  EXPECT_THROW(DiscreteSpace<R>({}, {}), InvalidArgument);
  EXPECT_THROW(DiscreteSpace<R>({"a", "a"}, {R(1, 2), R(1, 2)}), InvalidArgument);
  EXPECT_THROW(DiscreteSpace<R>({"a", "b"}, {R(3, 2), R(-1, 2)}), InvalidArgument);
  EXPECT_THROW(DiscreteSpace<R>({"a", "b"}, {R(1, 2), R(1, 3)}), InvalidArgument);
  EXPECT_THROW(DiscreteSpace<R>({"a"}, {R(1), R(0)}), InvalidArgument);
}

TEST(DiscreteSpace, ReorderedKeepsTheDistribution) {
  DiscreteSpace<R> s({"a", "b", "c"}, {R(1, 2), R(1, 3), R(1, 6)});
  auto t = s.reordered({"c", "a", "b"});
  EXPECT_EQ(t.prob(0), R(1, 6));
  EXPECT_EQ(t.prob(1), R(1, 2));
  EXPECT_THROW(s.reordered({"a", "b", "z"}), InvalidArgument);
}

TEST(EvidenceVariable, DualIsAnInvolution) {
  gen::Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    auto ev = gen::e_variable(rng, 1 + i % 6);
    ASSERT_EQ(dual(dual(ev)), ev);
    ASSERT_EQ(dual(ev).scale(), Scale::p_value);
  }
}

TEST(EvidenceVariable, ScaleConversionUsesReciprocals) {
  EvidenceVariable<R> ev({"a", "b", "c"}, {E(R(0)), E(R(4)), E::infinity()}, Scale::e_value);
  auto p = ev.values_on(Scale::p_value);
  EXPECT_EQ(p[0], E::infinity());
  EXPECT_EQ(p[1], E(R(1, 4)));
  EXPECT_EQ(p[2], E(R(0)));
  EXPECT_THROW(EvidenceVariable<R>({"a"}, {E(R(-1))}, Scale::e_value), InvalidArgument);
}

TEST(PosthocValidity, MatchesDirectSummation) {
  gen::Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + i % 7;
    auto P = gen::space(rng, n);
    auto ev = gen::e_variable(rng, n);
    Rational total(0);
    bool infinite = false;
    for (std::size_t x = 0; x < n; ++x) {
      const auto& e = ev.values()[x];
      if (P.prob(x) == 0) continue;
      if (e.is_infinite()) infinite = true;
      else total += P.prob(x) * e.finite();
    }
    const auto r = check_posthoc_validity(ev, Hypothesis<R>(P));
    ASSERT_EQ(r.statistic, infinite ? E::infinity() : E(total));
    ASSERT_EQ(r.valid, !infinite && total <= 1);
  }
}

TEST(PosthocValidity, LawMatchesDirectSummationAndQuadrature) {
  gen::Rng rng(13);
  for (int i = 0; i < 2000; ++i) {
    auto law = gen::law(rng, false);
    ASSERT_EQ(check_posthoc_validity(law).statistic, oracle::inverse_mean_atoms(law));
  }
  for (int i = 0; i < 2000; ++i) {
    auto law = gen::law(rng, true);
    const double want = oracle::inverse_mean(law);
    const auto got = check_posthoc_validity(law);
    if (std::isinf(want)) {
      ASSERT_TRUE(got.statistic.is_infinite());
    } else {
      ASSERT_NEAR(got.statistic.to_double(), want, 1e-9 * std::max(1.0, want));
    }
  }
}

TEST(PosthocValidity, CompositeHypothesisTakesTheWorstMember) {
  EvidenceVariable<R> ev({"h", "t"}, {E(R(2)), E(R(0))}, Scale::e_value);
  Hypothesis<R> H({coin(R(1, 4)), coin(R(1, 2)), coin(R(1, 3))});
  const auto r = check_posthoc_validity(ev, H);
  EXPECT_EQ(r.statistic, E(R(1)));
  EXPECT_EQ(r.worst_member, 1u);
  EXPECT_TRUE(r.valid);
}

TEST(ClassicalValidity, UniformIsExactlyOne) {
  const auto r = check_classical_validity(PValueLaw<R>::uniform());
  EXPECT_EQ(r.statistic, E(R(1)));
  EXPECT_TRUE(r.valid);
  EXPECT_FALSE(check_posthoc_validity(PValueLaw<R>::uniform()).valid);
}

TEST(ClassicalValidity, CapRestrictsTheLevels) {
  PValueLaw<R> law({{E(R(1)), R(1, 2)}}, {{R(0), R(1), R(1, 2)}});
  EXPECT_EQ(check_classical_validity(law).statistic, E(R(1)));
  EXPECT_EQ(check_classical_validity(law, E(R(1))).statistic, E(R(1, 2)));
}

TEST(ClassicalValidity, AgreesWithAScanOracle) {
  gen::Rng rng(14);
  for (int i = 0; i < 3000; ++i) {
    auto law = gen::law(rng, i % 2 == 1);
    const double got = check_classical_validity(law).statistic.to_double();
    const double scan = oracle::classical_sup_scan(law);
    ASSERT_NEAR(got, scan, 1e-9 * std::max(1.0, scan)) << i;
  }
}

TEST(ClassicalValidity, PosthocImpliesClassical) {
  gen::Rng rng(15);
  int posthoc_valid = 0;
  for (int i = 0; i < 10000; ++i) {
    auto law = gen::law(rng, i % 3 == 0);
    if (!check_posthoc_validity(law).valid) continue;
    ++posthoc_valid;
    ASSERT_TRUE(check_classical_validity(law).valid) << i;
  }
  EXPECT_GT(posthoc_valid, 100);
}

TEST(ClassicalValidity, PositiveMassAtZeroIsInvalid) {
  EvidenceVariable<R> ev({"h", "t"}, {E::infinity(), E(R(1, 2))}, Scale::e_value);
  const auto r = check_classical_validity(ev, Hypothesis<R>(coin(R(1, 2))));
  EXPECT_TRUE(r.statistic.is_infinite());
  EXPECT_FALSE(r.valid);
}

TEST(LawOf, MergesEqualValuesAndDropsNullOutcomes) {
  DiscreteSpace<R> P({"a", "b", "c", "d"}, {R(1, 4), R(1, 4), R(1, 2), R(0)});
  EvidenceVariable<R> p({"a", "b", "c", "d"}, {E(R(1, 2)), E(R(1, 2)), E::infinity(), E(R(0))}, Scale::p_value);
  auto law = law_of(p, P);
  ASSERT_EQ(law.atoms().size(), 2u);
  EXPECT_EQ(law.atoms()[0].location, E(R(1, 2)));
  EXPECT_EQ(law.atoms()[0].mass, R(1, 2));
  EXPECT_EQ(law.cdf(E(R(1))), R(1, 2));
  EXPECT_EQ(law.cdf(E::infinity()), R(1));
}

TEST(PValueLaw, ValidatesInput) {
  EXPECT_THROW(PValueLaw<R>({{E(R(0)), R(1)}}, {}), InvalidArgument);
  EXPECT_THROW(PValueLaw<R>({{E(R(1)), R(1, 2)}}, {}), InvalidArgument);
  EXPECT_THROW(PValueLaw<R>({}, {{R(0), R(1), R(1, 2)}, {R(1, 2), R(2), R(1, 2)}}), InvalidArgument);
  EXPECT_THROW(PValueLaw<R>({{E(R(1)), R(1, 2)}, {E(R(1)), R(1, 2)}}, {}), InvalidArgument);
}

TEST(TestFunction, RejectsAtAndAboveThePValue) {
  EvidenceVariable<R> p({"a", "b"}, {E(R(1, 10)), E::infinity()}, Scale::p_value);
  TestFunction<R> tf(p);
  EXPECT_TRUE(tf.rejects(E(R(1, 10)), "a"));
  EXPECT_FALSE(tf.rejects(E(R(1, 11)), "a"));
  EXPECT_FALSE(tf.rejects(E(R(1)), "b"));
  EXPECT_EQ(p_value(tf, "a"), E(R(1, 10)));
  EXPECT_THROW(TestFunction<R>(EvidenceVariable<R>({"a"}, {E(R(0))}, Scale::p_value)), InvalidArgument);
}

TEST(EvidenceLattice, PosthocEvidenceOfTheInducedFamilyRoundTrips) {
  gen::Rng rng(16);
  for (int i = 0; i < 10000; ++i) {
    const auto L = EvidenceLattice::chain(2 + i % 6);
    LatticeEvidence eps;
    for (int x = 0; x < 1 + i % 5; ++x) eps.push_back(static_cast<std::size_t>(gen::uniform_int(rng, 0, L.top())));
    ASSERT_EQ(posthoc_evidence_of_family(test_family_of(eps, L), L), eps);
  }
}

TEST(EvidenceLattice, RejectsTestsOutsideTheirLevel) {
  const auto L = EvidenceLattice::chain(3);
  LatticeTestFamily bad{{0, 0}, {2, 0}, {2, 2}};
  EXPECT_THROW(posthoc_evidence_of_family(bad, L), InvalidArgument);
  EXPECT_THROW(test_family_of({5}, L), InvalidArgument);
  EXPECT_EQ(L.sup(std::vector<std::size_t>{0, 2, 1}), 2u);
}
