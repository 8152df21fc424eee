// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "posthoc/calibration.hpp"
#include "posthoc/distortion.hpp"
#include "posthoc/fixtures.hpp"
#include "posthoc/merging.hpp"
#include "posthoc/optimal_design.hpp"
#include "posthoc/pfunctions.hpp"
#include "posthoc/sequential.hpp"
#include "posthoc/serialization.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace posthoc;
using R = Rational;
using E = Extended<R>;

namespace {

constexpr std::uint64_t kSeed = 7;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("violated: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

struct Criterion {
  int id;
  const char* title;
  double time_limit;  // seconds, 0 = none
  std::function<void(Outcome&)> run;
};

R lit(const char* s) { return parse_rational(s); }

std::string str(const E& v) { return v.str(); }

EvidenceVariable<R> valid_e(gen::Rng& rng, const DiscreteSpace<R>& P) {
  for (;;) {
    std::vector<E> v;
    R mean(0);
    for (std::size_t x = 0; x < P.size(); ++x) {
      const R e(gen::uniform_int(rng, 0, 30), gen::uniform_int(rng, 1, 6));
      v.emplace_back(e);
      mean += P.prob(x) * e;
    }
    if (mean == 0) continue;
    for (auto& e : v) e = E(e.finite() / mean);
    return {P.outcomes(), v, Scale::e_value};
  }
}

SimplePair<double> to_double_pair(const SimplePair<R>& p) {
  std::vector<double> a, b;
  for (std::size_t x = 0; x < p.size(); ++x) {
    a.push_back(p.P.prob(x).convert_to<double>());
    b.push_back(p.Q.prob(x).convert_to<double>());
  }
  return {DiscreteSpace<double>(p.outcomes(), a), DiscreteSpace<double>(p.outcomes(), b)};
}

// --- 1-3: distortion ------------------------------------------------------------

void decreasing_alpha(Outcome& o) {
  const auto law = presets::exact_law<R>();
  const auto s = presets::decreasing_alpha<R>();
  const auto r = distortion_report(law, s);
  o.require(conditional_size(law, s, lit("0.01")) == R(1), "size at .01 = 1");
  o.require(conditional_size(law, s, lit("0.05")) == R(4, 99), "size at .05 = 4/99");
  o.require(r.expected_distortion == E(R(9, 5)), "expected distortion 9/5, got " + str(r.expected_distortion));
  o.require(r.max_distortion == E(R(100)), "max distortion 100, got " + str(r.max_distortion));
  const auto f = distortion_report(presets::exact_law<double>(), presets::decreasing_alpha<double>());
  o.require(std::abs(f.expected_distortion.to_double() - 1.8) <= 1e-10, "float expected distortion");
  o.require(std::abs(f.max_distortion.to_double() - 100) <= 1e-10, "float max distortion");
  o.require(std::abs(conditional_size(presets::exact_law<double>(), presets::decreasing_alpha<double>(), 0.05) -
                     4.0 / 99) <= 1e-10,
            "float size at .05");
  o.note("expected " + str(r.expected_distortion) + ", max " + str(r.max_distortion));
}

void conservative_and_hacking(Outcome& o) {
  const auto c = distortion_report(presets::exact_law<R>(), presets::conservative<R>());
  o.require(c.expected_distortion == E(R(1, 2)) && c.max_distortion == E(R(50)), "conservative (1/2, 50)");
  const auto h = distortion_report(presets::valid_hacking_law<R>(), presets::decreasing_alpha<R>());
  o.require(h.expected_distortion == E(R(9, 10)) && h.max_distortion == E(R(100)), "valid_hacking (9/10, 100)");
  o.note("conservative (" + str(c.expected_distortion) + ", " + str(c.max_distortion) + "), valid_hacking (" +
         str(h.expected_distortion) + ", " + str(h.max_distortion) + ")");
}

void fragility(Outcome& o) {
  const auto law = presets::exact_law<R>();
  const R end = lit("0.05");
  int checked = 0;
  for (int k = 10; k <= 49; ++k) {
    const R c(k, 1000);
    const auto r = distortion_report(law, presets::fragility(c));
    o.require(r.expected_distortion == E(R(1) + (end - c) / end), "closed form at c = " + c.str());
    o.require(r.max_distortion == E(R(1) / c), "max 1/c at c = " + c.str());
    ++checked;
  }
  // Limits: both sequences are affine in c (resp. 1/max), so two points
  // determine the value at c = .05.
  const R c1 = lit("0.049"), c2 = lit("0.04999");
  const auto r1 = distortion_report(law, presets::fragility(c1));
  const auto r2 = distortion_report(law, presets::fragility(c2));
  const R e1 = r1.expected_distortion.finite(), e2 = r2.expected_distortion.finite();
  const R lim_e = e2 + (e2 - e1) / (c2 - c1) * (end - c2);
  const R i1 = R(1) / r1.max_distortion.finite(), i2 = R(1) / r2.max_distortion.finite();
  const R lim_m = R(1) / (i2 + (i2 - i1) / (c2 - c1) * (end - c2));
  o.require(std::abs((lim_e - 1).convert_to<double>()) <= 1e-10, "expected-distortion limit 1");
  o.require(std::abs((lim_m - 20).convert_to<double>()) <= 1e-10, "max-distortion limit 20");
  o.require(e2 == R(1) + (end - c2) / end, "closed form at c = .04999");
  std::ostringstream s;
  s << checked << " levels; at c=.04999: expected " << e2.str() << ", max " << r2.max_distortion.str()
    << "; limits " << lim_e.str() << ", " << lim_m.str();
  o.note(s.str());
}

// --- 4-5: validity ---------------------------------------------------------------

void posthoc_implies_classical(Outcome& o) {
  gen::Rng rng(kSeed);
  int valid = 0, counter = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto law = gen::law(rng, i % 3 == 0);
    if (!check_posthoc_validity(law).valid) continue;
    ++valid;
    if (!check_classical_validity(law).valid) ++counter;
  }
  o.require(counter == 0, std::to_string(counter) + " counterexamples");
  o.require(valid >= 100, "enough post-hoc valid laws");
  o.note("10000 laws, " + std::to_string(valid) + " post-hoc valid, " + std::to_string(counter) + " counterexamples");
}

void php_equivalence(Outcome& o) {
  gen::Rng rng(kSeed + 1);
  int disagreements = 0, valid = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto law = gen::law(rng, false);
    const bool oracle_valid = oracle::inverse_mean_atoms(law) <= E(R(1));
    valid += oracle_valid;
    if (check_posthoc_validity(law).valid != oracle_valid) ++disagreements;
  }
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + i % 7;
    const auto P = gen::space(rng, n);
    const auto ev = gen::e_variable(rng, n);
    R total(0);
    bool inf = false;
    for (std::size_t x = 0; x < n; ++x) {
      if (P.prob(x) == 0) continue;
      if (ev.values()[x].is_infinite()) inf = true;
      else total += P.prob(x) * ev.values()[x].finite();
    }
    const bool oracle_valid = !inf && total <= 1;
    valid += oracle_valid;
    if (check_posthoc_validity(dual(ev), Hypothesis<R>(P)).valid != oracle_valid) ++disagreements;
  }
  o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
  o.note("20000 cases (" + std::to_string(valid) + " valid), " + std::to_string(disagreements) + " disagreements");
}

// --- 6-8: optimal design ---------------------------------------------------------

void gaussian(Outcome& o) {
  const auto g = compare_gaussian(gaussian_pair(), 0.05, 1.0);
  o.require(std::abs(g.classical_critical_lr - 3.137) <= 0.01, "critical LR 3.137 +- .01");
  o.require(g.posthoc_threshold == 20.0, "post-hoc threshold 20");
  o.require(g.threshold_consistent, "rejection region is {LR >= 20}");
  o.require(g.posthoc_power < g.classical_power, "post-hoc power below classical");
  std::ostringstream s;
  s << "critical LR " << g.classical_critical_lr << " (reference " << g.reference_critical_lr << "), threshold "
    << g.posthoc_threshold << ", power " << g.posthoc_power << " < " << g.classical_power;
  o.note(s.str());
}

void utility_vs_oracle(Outcome& o) {
  const std::vector<const char*> utilities{"log", "power:2", "power:0.5", "np:0.1", "np:0.5"};
  std::vector<SimplePair<double>> fixtures{bernoulli_pair<double>(0.5, 0.75)};
  gen::Rng rng(kSeed + 2);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(i % 3);
    fixtures.push_back(to_double_pair(SimplePair<R>(gen::space(rng, n, false), gen::space(rng, n, true))));
  }
  double worst_gap = -1e300, worst_norm = 0;
  for (const auto& pair : fixtures)
    for (const char* u : utilities) {
      const auto U = UtilitySpec::parse(u);
      const auto opt = utility_optimal(pair, U);
      const double eu = expected_utility(opt.e, pair.Q, U);
      const auto grid = brute_force_optimal(pair, U, 40);
      worst_gap = std::max(worst_gap, grid.utility - eu);
      worst_norm = std::max(worst_norm, std::abs(opt.null_expectation - 1));
    }
  o.require(worst_gap <= 1e-9, "E_Q[U(e*)] >= grid best");
  o.require(worst_norm <= 1e-10, "E_P[e*] = 1 within 1e-10");
  std::ostringstream s;
  s << fixtures.size() << " pairs x 5 utilities; max(grid - optimum) = " << worst_gap << ", max |E_P[e*] - 1| = "
    << worst_norm;
  o.note(s.str());
}

oracle::Region np_region(const SimplePair<R>& pair, const NPResult<R>& np, const R& alpha) {
  oracle::Region r;
  for (std::size_t x = 0; x < pair.size(); ++x)
    if (np.p.values()[x] <= E(alpha)) {
      r.mask |= 1u << x;
      r.size += pair.P.prob(x);
      r.power += pair.Q.prob(x);
    }
  return r;
}

void np_recovery(Outcome& o) {
  std::vector<std::pair<std::string, SimplePair<R>>> fixtures{{"bernoulli", bernoulli_pair<R>(R(1, 2), R(3, 4))},
                                                              {"np_knapsack", np_knapsack_pair<R>()}};
  gen::Rng rng(kSeed + 3);
  for (int i = 0; i < 400; ++i)
    fixtures.emplace_back("random" + std::to_string(i),
                          SimplePair<R>(gen::space(rng, 2 + i % 11, false), gen::space(rng, 2 + i % 11, true)));
  const std::vector<R> alphas{lit("0.05"), lit("0.1"), lit("0.2"), lit("0.35"), lit("0.5")};
  int cases = 0, literal_fail = 0, own_size_fail = 0, lr_fail = 0, k_fail = 0;
  std::string first;
  for (const auto& [name, pair] : fixtures)
    for (const auto& a : alphas) {
      ++cases;
      const auto np = np_optimal(pair, a);
      const auto region = np_region(pair, np, a);
      const auto best = oracle::best_region(pair, a);
      if (region.power != best.power) {
        if (literal_fail++ == 0 || name == "np_knapsack")
          first = name + " at alpha* = " + a.str() + ": NP power " + region.power.str() + " (size " +
                  region.size.str() + "), exhaustive best " + best.power.str() + " (size " + best.size.str() + ")";
      }
      if (region.power != oracle::best_region(pair, region.size).power) ++own_size_fail;
      if (region.mask != oracle::lr_sorted_region(pair, a).mask) ++lr_fail;
      if (!(E(a) <= np.k)) ++k_fail;
    }
  o.require(literal_fail == 0, std::to_string(literal_fail) + " of " + std::to_string(cases) +
                                   " cases where the NP region is beaten by a level-alpha* region");
  o.require(k_fail == 0, "k >= alpha*");
  o.note("counterexample: " + first);
  o.note("companion: NP region most powerful among regions no larger than itself: " +
         std::string(own_size_fail == 0 ? "PASS" : "FAIL") + " (" + std::to_string(own_size_fail) + " violations)");
  o.note("companion: NP region equals the likelihood-ratio-sorted region: " +
         std::string(lr_fail == 0 ? "PASS" : "FAIL") + " (" + std::to_string(lr_fail) + " violations)");
  o.note("companion: k >= alpha* in all " + std::to_string(cases) + " cases: " + (k_fail == 0 ? "PASS" : "FAIL"));
}

// --- 9: calibration and merging --------------------------------------------------

void hmean_suite(Outcome& o) {
  const std::vector<HIndex> ladder{HIndex::neg_infinity(), HIndex(-3), HIndex(-1), HIndex(R(-1, 2)), HIndex(0),
                                   HIndex(R(1, 3)), HIndex(R(1, 2)), HIndex(1), HIndex(2), HIndex::infinity()};
  gen::Rng rng(kSeed + 4);
  int violations = 0, checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + i % 6;
    const auto P = gen::space(rng, n);
    const auto ev = gen::e_variable(rng, n, 0.05);
    Hypothesis<R> H(P);
    bool zero = false, inf = false;
    for (std::size_t x = 0; x < n; ++x)
      if (P.prob(x) > 0) {
        zero = zero || ev.values()[x].is_zero();
        inf = inf || ev.values()[x].is_infinite();
      }
    if (zero && inf) continue;  // rho_0 undefined
    ++checked;
    double prev = -1;
    for (const auto& h : ladder) {
      const double v = h_mean(ev, h, H).value.to_double();
      if (v * (1 + 1e-12) < prev) ++violations;
      prev = v;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " monotonicity violations");

  const auto m = minimal_h_counterexample(HIndex(R(1, 2)), 0.25);
  Hypothesis<double> Hm(m.space);
  const double rho = h_mean(m.evidence, HIndex(R(1, 2)), Hm).value.to_double();
  const double sup = check_classical_validity(m.evidence, Hm).statistic.to_double();
  o.require(rho == 1.0 && sup == 4.0, "minimal_h (rho_h, classical sup) = (1, 4)");

  int harmonic_bad = 0, geometric_bad = 0, product_bad = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto P = gen::space(rng, 1 + i % 5);
    std::vector<EvidenceVariable<R>> ps;
    for (int j = 0; j < 3; ++j) ps.push_back(dual(valid_e(rng, P)));
    if (!check_posthoc_validity(merge_harmonic(ps, gen::probabilities(rng, 3)), Hypothesis<R>(P)).valid)
      ++harmonic_bad;
  }
  for (int i = 0; i < 2000; ++i) {
    // Dependent inputs: all three are functions of the same outcome.
    const std::size_t n = 2 + i % 4;
    const auto P = gen::space(rng, n, false);
    Hypothesis<R> H(P);
    std::vector<EvidenceVariable<R>> evs;
    double prod = 1;
    for (int j = 0; j < 3; ++j) {
      evs.push_back(gen::e_variable(rng, n, 0.0));
      prod *= h_mean(evs.back(), HIndex(0), H).value.to_double();
    }
    const double got = h_mean(merge_geometric(evs), HIndex(0), H).value.to_double();
    if (std::abs(got - prod) > 1e-9 * std::max(1.0, prod)) ++geometric_bad;
  }
  for (int i = 0; i < 2000; ++i) {
    std::vector<ProductComponent<R>> comps;
    for (int j = 0; j < 2; ++j) {
      const auto P = gen::space(rng, 1 + (i + j) % 4);
      comps.push_back({valid_e(rng, P), Hypothesis<R>(P)});
    }
    const auto merged = merge_product_independent(comps);
    if (check_posthoc_validity(merged.evidence, merged.hypothesis).statistic != E(R(1))) ++product_bad;
  }
  o.require(harmonic_bad == 0, "harmonic closure");
  o.require(geometric_bad == 0, "geometric closure under dependence");
  o.require(product_bad == 0, "independent product closure");
  std::ostringstream s;
  s << checked << " e-variables x " << ladder.size() << " h-values, " << violations << " violations; minimal_h ("
    << rho << ", " << sup << "); closure failures harmonic " << harmonic_bad << ", geometric " << geometric_bad
    << ", product " << product_bad;
  o.note(s.str());
}

// --- 10: p-functions -------------------------------------------------------------

void galois_suite(Outcome& o) {
  gen::Rng rng(kSeed + 5);
  int round_trip = 0, adjunction = 0, randomize = 0, soft = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + i % 4;
    const auto pf = gen::pfunction(rng, n);
    const auto tf = gen::test_function(rng, n);
    if (pfunction_of(test_function_of(pf)) != pf) ++round_trip;
    if (test_function_of(pfunction_of(tf)) != tf) ++round_trip;
    if (!galois_adjunction_holds(test_function_of(pf), pf)) ++adjunction;
    if (!galois_adjunction_holds(tf, pfunction_of(tf))) ++adjunction;
  }
  for (int i = 0; i < 5000; ++i) {
    const std::size_t n = 1 + i % 5;
    const auto P = gen::space(rng, n);
    Hypothesis<R> H(P);
    const auto e = gen::e_variable(rng, n);
    if (check_pfunction_posthoc(uniform_randomize(dual(e), gen::u_grid(rng, 6)), H).statistic !=
        check_posthoc_validity(e, H).statistic)
      ++randomize;
    if (check_test_function_posthoc(soft_test_function(e, gen::u_grid(rng, 6)), H).statistic !=
        check_posthoc_validity(e, H).statistic)
      ++soft;
  }
  DiscreteSpace<R> point({"x"}, {R(1)});
  const auto id = uniform_randomize(EvidenceVariable<R>({"x"}, {E(R(1))}, Scale::p_value));
  const auto witness = product_merge_failure_witness(id, point);
  o.require(round_trip == 0, "round trips");
  o.require(adjunction == 0, "adjunction");
  o.require(randomize == 0, "uniform_randomize statistic = E[1/p]");
  o.require(soft == 0, "soft_test_function statistic = E[e]");
  o.require(witness == 2, "failure witness 2");
  std::ostringstream s;
  s << "violations: round trip " << round_trip << ", adjunction " << adjunction << ", randomize " << randomize
    << ", soft " << soft << "; witness " << witness;
  o.note(s.str());
}

// --- 11-13: sequential and double post-hoc --------------------------------------

void markov_suite(Outcome& o) {
  int fixtures = 0;
  for (const auto& [name, p] : fixture_presets()) {
    if (p.kind != FixtureKind::evidence) continue;
    const auto r = markov_equality_check(evidence_from_json<R>(p.value["evidence"]),
                                         hypothesis_from_json<R>(p.value["hypothesis"]));
    o.require(r.lhs == r.rhs, "Markov equality on " + name);
    ++fixtures;
  }
  gen::Rng rng(kSeed + 6);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + i % 6;
    const auto P = gen::space(rng, n);
    if (!mrmw_sandwich(gen::e_variable(rng, n), gen::positive(rng, 30, 10), Hypothesis<R>(P)).ordered) ++bad;
  }
  o.require(bad == 0, "MRMW ordering");
  o.note(std::to_string(fixtures) + " fixtures exact; MRMW violations " + std::to_string(bad) + " / 10000");
}

void ville(Outcome& o) {
  const auto preset = [](const char* n) { return fixture_presets().at(n).value; };
  const auto hitting = rule_from_json(preset("hitting2"));
  const auto mart = ville_equality_check(model_from_json(preset("martingale")), hitting, 100000, kSeed);
  const auto super = ville_equality_check(model_from_json(preset("supermartingale")), hitting, 100000, kSeed);
  const auto super0 =
      ville_equality_check(model_from_json(preset("supermartingale")), StoppingRule::immediate(), 100000, kSeed);
  const auto bad = ville_equality_check(model_from_json(preset("invalid_process")), hitting, 100000, kSeed);
  o.require(std::abs(mart.mean - 1) <= 3 * mart.standard_error && mart.pass, "martingale within 3 SE of 1");
  o.require(mart.identity_holds && super.identity_holds, "per-path identity");
  o.require(super.mean <= 1 + 3 * super.standard_error && super.pass, "supermartingale <= 1 + 3 SE");
  o.require(super0.mean == 1.0, "tau = 0 exact");
  o.require(!bad.pass, "invalid process flagged");
  std::ostringstream s;
  s << "martingale " << mart.mean << " +- " << mart.standard_error << "; supermartingale " << super.mean << " +- "
    << super.standard_error << ", tau=0 " << super0.mean << "; invalid " << bad.mean << " +- " << bad.standard_error;
  o.note(s.str());
}

void double_posthoc(Outcome& o) {
  const auto r = double_posthoc_check(bernoulli_pair<R>(R(1, 2), R(3, 4)));
  o.require(r.null_side == E(R(1)) && r.alternative_side == E(R(1)), "both sides exactly 1");
  const auto& fam = fixture_presets().at("fwer_independent").value;
  std::vector<TestFunction<R>> tfs;
  for (const auto& e : fam["evidence"]) tfs.emplace_back(evidence_from_json<R>(e));
  const auto stat = check_posthoc_validity(fwer_merge(TestFamilyCollection<R>(tfs)).p(),
                                           hypothesis_from_json<R>(fam["hypothesis"]));
  o.require(stat.statistic == E(R(3, 2)), "E[max e] = 3/2");
  o.require(!stat.valid, "FWER fixture fails the post-hoc check");
  o.note("LR sides (" + str(r.null_side) + ", " + str(r.alternative_side) + "); FWER statistic " + str(stat.statistic));
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "decreasing_alpha example", 1.0, decreasing_alpha},
      {2, "conservative and valid_hacking examples", 1.0, conservative_and_hacking},
      {3, "fragility sweep and limits", 0, fragility},
      {4, "post-hoc validity implies classical validity", 0, posthoc_implies_classical},
      {5, "post-hoc verdict equals direct summation", 0, php_equivalence},
      {6, "log-optimal Gaussian example", 5.0, gaussian},
      {7, "utility-optimal against grid oracle", 0, utility_vs_oracle},
      {8, "Neyman-Pearson recovery against exhaustive search", 0, np_recovery},
      {9, "h-mean monotonicity, minimal_h and merging closure", 0, hmean_suite},
      {10, "Galois correspondence suite", 0, galois_suite},
      {11, "Markov equality and MRMW sandwich", 0, markov_suite},
      {12, "Ville equality on the process fixtures", 30.0, ville},
      {13, "double post-hoc and FWER fixture", 0, double_posthoc},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.notes.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      o.pass = false;
      o.notes.push_back("runtime limit exceeded");
    }
    failed += !o.pass;
    std::printf("%s  %2d  %s  (%.3f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs);
    for (const auto& n : o.notes) std::printf("          %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
