#include "internal.hpp"

#include "posthoc/calibration.hpp"
#include "posthoc/merging.hpp"

#include <cmath>

namespace posthoc::cli {

namespace {

using detail::num;

constexpr double kFloatTolerance = 1e-10;

struct Check {
  std::string id;
  Json expected;
  Json actual;
  std::string mode;
  bool match;
};

template <Scalar T>
class Suite {
public:
  /// Golden value compared exactly (rational) or to 1e-10 (float).
  void exact(const std::string& id, const Extended<T>& expected, const Extended<T>& actual) {
    bool ok;
    if constexpr (ScalarTraits<T>::exact) {
      ok = expected == actual;
    } else {
      ok = expected.is_infinite() || actual.is_infinite()
               ? expected == actual
               : std::abs(actual.to_double() - expected.to_double()) <= kFloatTolerance;
    }
    checks.push_back({id, num(expected), num(actual), ScalarTraits<T>::exact ? "exact" : "abs:1e-10", ok});
  }
  void exact(const std::string& id, const char* expected, const Extended<T>& actual) {
    exact(id, std::string_view(expected) == "inf" ? Extended<T>::infinity() : Extended<T>(parse_scalar<T>(expected)),
          actual);
  }

  void approx(const std::string& id, double expected, double actual, double tol) {
    const bool ok = std::isinf(expected) ? expected == actual : std::abs(actual - expected) <= tol;
    char mode[32];
    std::snprintf(mode, sizeof mode, "abs:%g", tol);
    checks.push_back({id, num(expected), num(actual), mode, ok});
  }

  void flag(const std::string& id, bool expected, bool actual) {
    checks.push_back({id, expected, actual, "bool", expected == actual});
  }

  void hmean(const std::string& id, const char* expected, const HMean<T>& r) {
    if (r.exact) return exact(id, expected, r.value);
    approx(id, to_double(parse_scalar<T>(expected)), r.value.to_double(), kFloatTolerance);
  }

  std::vector<Check> checks;
};

Json preset(const char* name, Json& fixtures) {
  const auto& p = fixture_presets().at(name);
  fixtures[name] = Json{{"ref", std::string("preset:") + name}, {"hash", fixture_hash(p.value)}};
  return p.value;
}

template <Scalar T>
T lit(const char* s) {
  return parse_scalar<T>(s);
}

template <Scalar T>
void distortion_examples(Suite<T>& s, Table& examples, Json& fx) {
  const auto exact_law = law_from_json<T>(preset("exact", fx));
  const auto hacking_law = law_from_json<T>(preset("valid_hacking", fx));
  const auto dec = strategy_from_json<T>(preset("decreasing_alpha", fx));
  const auto con = strategy_from_json<T>(preset("conservative", fx));

  auto row = [&](const std::string& id, const DistortionReport<T>& r) {
    examples.rows.push_back({id, num(r.expected_distortion), num(r.max_distortion), r.exact});
  };

  const auto d = distortion_report(exact_law, dec);
  s.exact("decreasing_alpha.size_at_0.01", "1", conditional_size(exact_law, dec, lit<T>("0.01")));
  s.exact("decreasing_alpha.size_at_0.05", "4/99", conditional_size(exact_law, dec, lit<T>("0.05")));
  s.exact("decreasing_alpha.expected_distortion", "9/5", d.expected_distortion);
  s.exact("decreasing_alpha.max_distortion", "100", d.max_distortion);
  row("decreasing_alpha", d);

  const auto c = distortion_report(exact_law, con);
  s.exact("conservative.expected_distortion", "1/2", c.expected_distortion);
  s.exact("conservative.max_distortion", "50", c.max_distortion);
  row("conservative", c);

  const auto h = distortion_report(hacking_law, dec);
  s.exact("valid_hacking.expected_distortion", "9/10", h.expected_distortion);
  s.exact("valid_hacking.max_distortion", "100", h.max_distortion);
  row("valid_hacking", h);

  const T five = lit<T>("0.05");
  for (const char* cs : {"0.01", "0.02", "0.03", "0.04", "0.049"}) {
    const T cv = lit<T>(cs);
    const auto r = distortion_report(exact_law, presets::fragility(cv));
    const std::string id = std::string("fragility_") + cs;
    s.exact(id + ".expected_distortion", Extended<T>(T(1) + (five - cv) / five), r.expected_distortion);
    s.exact(id + ".max_distortion", Extended<T>(T(1) / cv), r.max_distortion);
    row(id, r);
  }
  // Both quantities are affine in c (the max through its reciprocal), so two
  // points determine the value at c = .05.
  const T c1 = lit<T>("0.049"), c2 = lit<T>("0.04999");
  const auto r1 = distortion_report(exact_law, presets::fragility(c1));
  const auto r2 = distortion_report(exact_law, presets::fragility(c2));
  const T e1 = r1.expected_distortion.finite(), e2 = r2.expected_distortion.finite();
  const T m1 = T(1) / r1.max_distortion.finite(), m2 = T(1) / r2.max_distortion.finite();
  const T step = (five - c2) / (c2 - c1);
  s.exact("fragility.limit_expected_distortion", "1", Extended<T>(e2 + (e2 - e1) * step));
  s.exact("fragility.limit_max_distortion", "20", Extended<T>(T(1) / (m2 + (m2 - m1) * step)));
}

template <Scalar T>
void validity_examples(Suite<T>& s, Json& fx) {
  const auto exact_law = law_from_json<T>(preset("exact", fx));
  const auto hacking_law = law_from_json<T>(preset("valid_hacking", fx));
  const auto atom = law_from_json<T>(preset("atom_half", fx));
  const auto one = law_from_json<T>(preset("point_one", fx));

  s.exact("exact_law.classical_statistic", "1", check_classical_validity(exact_law).statistic);
  s.exact("exact_law.posthoc_statistic", "inf", check_posthoc_validity(exact_law).statistic);
  s.flag("exact_law.posthoc_valid", false, check_posthoc_validity(exact_law).valid);
  s.exact("valid_hacking_law.classical_statistic", "1", check_classical_validity(hacking_law).statistic);
  s.flag("valid_hacking_law.posthoc_valid", false, check_posthoc_validity(hacking_law).valid);
  s.exact("atom_half.posthoc_statistic", "2", check_posthoc_validity(atom).statistic);

  const auto a_exact = impossibility_audit(exact_law);
  s.flag("audit.exact_law.fails", true, a_exact.verdict == AuditVerdict::fails);
  s.exact("audit.exact_law.witness_max_distortion", "inf", a_exact.witness_max_distortion.value_or(Extended<T>(0)));
  const auto a_atom = impossibility_audit(atom);
  s.flag("audit.atom_half.fails", true, a_atom.verdict == AuditVerdict::fails);
  s.exact("audit.atom_half.witness_max_distortion", "2", a_atom.witness_max_distortion.value_or(Extended<T>(0)));
  s.flag("audit.point_one.controls", true, impossibility_audit(one).verdict == AuditVerdict::controls);
}

template <Scalar T>
void optimal_examples(Suite<T>& s, Json& fx) {
  const auto bern = pair_from_json<T>(preset("bernoulli", fx));
  const auto p = log_optimal(bern);
  s.exact("bernoulli.log_optimal_p.0", "2", p.values()[0]);
  s.exact("bernoulli.log_optimal_p.1", "2/3", p.values()[1]);
  const auto np = np_optimal(bern, lit<T>("0.5"));
  s.exact("bernoulli.np_p.0", "inf", np.p.values()[0]);
  s.exact("bernoulli.np_p.1", "1/2", np.p.values()[1]);
  const auto dp = double_posthoc_check(bern);
  s.exact("bernoulli.double_posthoc.null_side", "1", dp.null_side);
  s.exact("bernoulli.double_posthoc.alternative_side", "1", dp.alternative_side);

  const auto knap = pair_from_json<T>(preset("np_knapsack", fx));
  const T a = lit<T>("0.35");
  s.flag("np_knapsack.k_at_least_alpha", true, Extended<T>(a) <= np_optimal(knap, a).k);
}

template <Scalar T>
void calibration_examples(Suite<T>& s, Json& fx) {
  const Json fam = preset("fwer_independent", fx);
  const auto H = hypothesis_from_json<T>(fam["hypothesis"]);
  const auto e = evidence_from_json<T>(fam["evidence"][0]);
  s.hmean("h_mean.zero_two.h=1", "1", h_mean(e, HIndex(1), H));
  s.hmean("h_mean.zero_two.h=1/2", "1/2", h_mean(e, HIndex(Rational(1, 2)), H));
  s.hmean("h_mean.zero_two.h=0", "0", h_mean(e, HIndex(0), H));
  s.hmean("h_mean.zero_two.h=inf", "2", h_mean(e, HIndex::infinity(), H));

  const auto m = minimal_h_counterexample(HIndex(Rational(1, 2)), 0.25);
  const Hypothesis<double> Hm(m.space);
  s.approx("minimal_h.M", 16, m.M, kFloatTolerance);
  s.approx("minimal_h.rho_h", 1, h_mean(m.evidence, HIndex(Rational(1, 2)), Hm).value.to_double(), kFloatTolerance);
  s.approx("minimal_h.classical_sup", 4, check_classical_validity(m.evidence, Hm).statistic.to_double(),
           kFloatTolerance);

  for (const char* name : {"markov_half", "markov_zero_two", "markov_atom_ten"}) {
    const Json f = preset(name, fx);
    const auto X = evidence_from_json<T>(f["evidence"]);
    const auto Hx = hypothesis_from_json<T>(f["hypothesis"]);
    const auto r = markov_equality_check(X, Hx);
    s.exact(std::string(name) + ".markov_lhs", r.rhs, r.lhs);
    s.exact(std::string(name) + ".markov_rhs", std::string_view(name) == "markov_atom_ten" ? "1/2" : "1", r.rhs);
  }
  const Json f = preset("markov_half", fx);
  const auto w = mrmw_sandwich(evidence_from_json<T>(f["evidence"]), T(1), hypothesis_from_json<T>(f["hypothesis"]));
  s.exact("markov_half.mrmw_a", "1/2", w.a);
  s.exact("markov_half.mrmw_b", "3/4", w.b);
  s.exact("markov_half.mrmw_r", "1", w.r);
}

template <Scalar T>
void pfunction_examples(Suite<T>& s, Json& fx) {
  const Json id = preset("identity", fx);
  const auto pid = pfunction_source_from_json<T>(id).pf;
  const auto Hid = hypothesis_from_json<T>(id["hypothesis"]);
  s.exact("pfunction.identity.statistic", "1", check_pfunction_posthoc(pid, Hid).statistic);
  s.approx("pfunction.identity.product_failure_n", 2,
           static_cast<double>(product_merge_failure_witness(pid, Hid.members().front(), 8)), 0);

  const Json rb = preset("randomized_bernoulli", fx);
  const auto Hb = hypothesis_from_json<T>(rb["hypothesis"]);
  const auto prb = pfunction_source_from_json<T>(rb).pf;
  s.exact("pfunction.randomized_bernoulli.statistic", "1", check_pfunction_posthoc(prb, Hb).statistic);
  s.flag("pfunction.randomized_bernoulli.round_trip", true, pfunction_of(test_function_of(prb)) == prb);

  const Json sb = preset("soft_bernoulli", fx);
  const auto src = pfunction_source_from_json<T>(sb);
  s.exact("pfunction.soft_bernoulli.statistic", "1", check_test_function_posthoc(*src.tf, Hb).statistic);
  s.flag("pfunction.soft_bernoulli.adjunction", true, galois_adjunction_holds(*src.tf, src.pf));
}

template <Scalar T>
void merging_examples(Suite<T>& s, Json& fx) {
  for (const auto& [name, expected, valid] :
       {std::tuple{"fwer_independent", "3/2", false}, std::tuple{"fwer_scaled", "1", true}}) {
    const Json fam = preset(name, fx);
    const auto H = hypothesis_from_json<T>(fam["hypothesis"]);
    std::vector<TestFunction<T>> tfs;
    for (const auto& e : fam["evidence"]) tfs.emplace_back(evidence_from_json<T>(e));
    const auto r = check_posthoc_validity(fwer_merge(TestFamilyCollection<T>(tfs)).p(), H);
    s.exact(std::string(name) + ".fwer_statistic", expected, r.statistic);
    s.flag(std::string(name) + ".fwer_valid", valid, r.valid);
  }
  const Json fam = preset("doubled_identity", fx);
  std::vector<PFunction<T>> pfs;
  for (const auto& j : fam["pfunctions"]) pfs.push_back(pfunction_source_from_json<T>(j).pf);
  const auto merged = merge_pfunctions_harmonic(pfs, {lit<T>("0.5"), lit<T>("0.5")});
  s.exact("doubled_identity.harmonic_statistic", "1/2",
          check_pfunction_posthoc(merged, hypothesis_from_json<T>(fam["hypothesis"])).statistic);
}

void gaussian_examples(Suite<double>& s, Json& fx) {
  const auto g = compare_gaussian(generated_pair(preset("gaussian", fx)), 0.05, 1.0);
  s.approx("gaussian.classical_critical_lr", 3.137, g.classical_critical_lr, 0.01);
  s.approx("gaussian.posthoc_threshold", 20, g.posthoc_threshold, kFloatTolerance);
  s.flag("gaussian.threshold_consistent", true, g.threshold_consistent);
  s.flag("gaussian.posthoc_power_below_classical", true, g.posthoc_power < g.classical_power);
}

void utility_examples(Suite<double>& s, Json& fx) {
  const auto bern = pair_from_json<double>(preset("bernoulli", fx));
  struct Golden {
    const char* utility;
    double lambda;
  };
  for (const auto& [u, lambda] : {Golden{"log", 1.0}, Golden{"power:2", 0.9330127018922193}, Golden{"np:0.1", 1.5}}) {
    const auto U = UtilitySpec::parse(u);
    const auto opt = utility_optimal(bern, U);
    s.approx(std::string("bernoulli.") + u + ".lambda", lambda, opt.lambda, 1e-6);
    s.approx(std::string("bernoulli.") + u + ".null_expectation", 1, opt.null_expectation, kFloatTolerance);
    if (U.kind() == UtilitySpec::Kind::log)
      s.approx("bernoulli.log.expected_utility", 0.1307, expected_utility(opt.e, bern.Q, U), 5e-4);
  }
}

template <Scalar T>
RunResult run_suite(const std::string& backend) {
  Suite<T> s;
  Suite<double> sd;
  Json fx = Json::object();
  Table examples{{"example_id", "expected_distortion", "max_distortion", "exact"}, {}};
  distortion_examples(s, examples, fx);
  validity_examples(s, fx);
  optimal_examples(s, fx);
  calibration_examples(s, fx);
  pfunction_examples(s, fx);
  merging_examples(s, fx);
  gaussian_examples(sd, fx);
  utility_examples(sd, fx);

  RunResult r;
  Table checks{{"check_id", "expected", "actual", "mode", "match"}, {}};
  for (const auto* list : {&s.checks, &sd.checks}) {
    for (const auto& c : *list) {
      checks.rows.push_back({c.id, c.expected, c.actual, c.mode, c.match});
      if (!c.match) r.mismatches.push_back(c.id);
    }
  }
  r.exit_code = r.mismatches.empty() ? kOk : kMismatch;
  r.report = Json{{"schema_version", kSchemaVersion},
                  {"kind", "examples"},
                  {"backend", backend},
                  {"seed", nullptr},
                  {"n", nullptr},
                  {"params", Json::object()},
                  {"fixtures", fx},
                  {"results", Json{{"checks", checks.rows.size()}, {"mismatches", r.mismatches}}},
                  {"verdict", r.mismatches.empty() ? "PASS" : "FAIL"},
                  {"tables", Json::array({"checks", "examples"})}};
  r.tables["examples"] = std::move(examples);
  r.tables["checks"] = std::move(checks);
  return r;
}

}  // namespace

RunResult reproduce_examples(const std::string& backend) {
  if (backend == "exact") return run_suite<Rational>(backend);
  if (backend == "float") return run_suite<double>(backend);
  throw UsageError("backend: expected exact or float");
}

}  // namespace posthoc::cli
