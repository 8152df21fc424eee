#include "internal.hpp"

#include "posthoc/calibration.hpp"
#include "posthoc/merging.hpp"

#include <filesystem>

namespace posthoc::cli::detail {

std::string label_of(const Json& ref, const std::string& fallback) {
  if (ref.is_object()) return ref.value("name", fallback);
  if (!ref.is_string()) return fallback;
  const auto s = ref.get<std::string>();
  if (s.rfind("preset:", 0) == 0) return s.substr(7);
  return std::filesystem::path(s).stem().string();
}

bool exact_backend(const ExperimentConfig& cfg) { return cfg.backend == "exact"; }

namespace {

template <Scalar T>
Json validity_json(const ValidityReport<T>& r) {
  Json j{{"statistic", num(r.statistic)}, {"valid", r.valid}, {"exact", r.exact}};
  if (r.witness_level) j["witness_level"] = num(*r.witness_level);
  if (r.worst_member) j["worst_member"] = *r.worst_member;
  return j;
}

Json array_param(const Context& ctx, const char* key, Json fallback) {
  Json v = ctx.param(key, std::move(fallback));
  if (!v.is_array() || v.empty()) throw UsageError(std::string(key) + ": expected a nonempty array");
  return v;
}

// --- distortion -------------------------------------------------------------

template <Scalar T>
Json distortion_impl(Context& ctx) {
  const auto lawf = ctx.fixture("law", FixtureKind::law, "preset:exact");
  const auto law = law_from_json<T>(lawf.value);
  const Json refs = array_param(ctx, "strategies",
                                Json::array({"preset:decreasing_alpha", "preset:conservative", "preset:fragility_04",
                                             "preset:constant_05"}));
  const Json mc_flag = ctx.param("monte_carlo", false);
  if (!mc_flag.is_boolean()) throw UsageError("monte_carlo: expected true or false");
  const bool mc = mc_flag.get<bool>();
  std::uint64_t seed = 0, n = 0;
  if (mc) {
    seed = ctx.seed();
    n = ctx.n(1000000);
  }

  Json out;
  const auto audit = impossibility_audit(law);
  Json aj{{"verdict", to_string(audit.verdict)}, {"essential_infimum", num(audit.essential_infimum)}};
  if (audit.witness_max_distortion) aj["witness_max_distortion"] = num(*audit.witness_max_distortion);
  out["law"] = Json{{"classical", validity_json(check_classical_validity(law))},
                    {"posthoc", validity_json(check_posthoc_validity(law))},
                    {"audit", aj}};

  Table levels{{"strategy", "level", "mass", "size", "distortion"}, {}};
  Table summary{{"strategy", "expected_distortion", "max_distortion", "exact", "mc_estimate", "mc_standard_error", "mc_n"}, {}};
  Json results = Json::array();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const std::string label = label_of(refs[i], "strategy" + std::to_string(i));
    const auto sf = ctx.fixture_at("strategies[" + std::to_string(i) + "]", refs[i], FixtureKind::strategy);
    const auto s = strategy_from_json<T>(sf.value, "strategies[" + std::to_string(i) + "]");
    const auto r = distortion_report(law, s);
    Json rows = Json::array();
    for (const auto& row : r.per_level) {
      rows.push_back(Json{{"level", num(row.level)}, {"mass", num(row.mass)}, {"size", num(row.size)},
                          {"distortion", num(row.distortion)}});
      levels.rows.push_back({label, num(row.level), num(row.mass), num(row.size), num(row.distortion)});
    }
    Json sj{{"strategy", label},
            {"expected_distortion", num(r.expected_distortion)},
            {"max_distortion", num(r.max_distortion)},
            {"exact", r.exact},
            {"per_level", rows}};
    std::vector<Json> srow{label, num(r.expected_distortion), num(r.max_distortion), r.exact, nullptr, nullptr, nullptr};
    if (mc) {
      const auto law_d = law_from_json<double>(lawf.value);
      const auto s_d = strategy_from_json<double>(sf.value);
      const auto est = monte_carlo_distortion(sampler_of(law_d), s_d, n, seed);
      sj["monte_carlo"] = Json{{"estimate", est.estimate}, {"standard_error", est.standard_error}, {"n", est.n}};
      srow[4] = est.estimate;
      srow[5] = est.standard_error;
      srow[6] = est.n;
    }
    summary.rows.push_back(std::move(srow));
    results.push_back(std::move(sj));
  }
  out["strategies"] = results;
  ctx.add_table("distortion_levels", std::move(levels));
  ctx.add_table("distortion_summary", std::move(summary));
  return out;
}

// --- optimal ----------------------------------------------------------------

std::vector<UtilitySpec> utilities_of(const Json& list) {
  std::vector<UtilitySpec> out;
  for (const auto& u : list) {
    if (!u.is_string()) throw UsageError("utilities: expected strings such as \"log\" or \"power:2\"");
    try {
      out.push_back(UtilitySpec::parse(u.get<std::string>()));
    } catch (const InvalidArgument& e) {
      throw UsageError(std::string("utilities: ") + e.what());
    }
  }
  return out;
}

template <Scalar T>
Json optimal_core(Context& ctx, const SimplePair<T>& pair, const SimplePair<double>& pair_d, const T& alpha,
                  const Json& gaussian) {
  Json out;
  const auto p_log = log_optimal(pair);
  const auto np = np_optimal(pair, alpha);
  const UtilitySpec log_u = UtilitySpec::log_utility();
  Json lj{{"expected_log_utility", num(expected_utility(p_log, pair.Q, log_u))}};
  try {
    const auto dp = double_posthoc_check(pair);
    lj["double_posthoc"] =
        Json{{"null_side", num(dp.null_side)}, {"alternative_side", num(dp.alternative_side)}, {"valid", dp.valid}};
  } catch (const InvalidArgument& e) {
    lj["double_posthoc"] = Json{{"error", e.what()}};
  }
  out["log_optimal"] = lj;

  T size(0), power(0);
  const auto p_np = np.p.values();
  for (std::size_t x = 0; x < pair.size(); ++x) {
    if (p_np[x] <= Extended<T>(alpha)) {
      size += pair.P.prob(x);
      power += pair.Q.prob(x);
    }
  }
  out["neyman_pearson"] = Json{{"alpha", num(alpha)},   {"boundary_ratio", num(np.c)}, {"k", num(np.k)},
                               {"lambda", num(np.lambda)}, {"size", num(size)},        {"power", num(power)}};

  if (!gaussian.is_null()) {
    const double shift = gaussian.contains("shift") ? scalar_from_json<double>(gaussian["shift"], "pair.shift") : 1.0;
    const auto g = compare_gaussian(pair_d, to_double(alpha), shift);
    out["gaussian"] = Json{{"classical_critical_lr", g.classical_critical_lr},
                           {"reference_critical_lr", g.reference_critical_lr},
                           {"posthoc_threshold", g.posthoc_threshold},
                           {"threshold_consistent", g.threshold_consistent},
                           {"classical_power", g.classical_power},
                           {"posthoc_power", g.posthoc_power}};
  }

  const auto utilities =
      utilities_of(array_param(ctx, "utilities", Json::array({"log", "power:2", "power:0.5", "np:0.1", "np:0.5"})));
  Table ut{{"utility", "lambda", "expected_utility", "null_expectation"}, {}};
  Json uj = Json::array();
  std::vector<std::pair<std::string, EvidenceVariable<double>>> e_cols;
  for (const auto& U : utilities) {
    try {
      const auto opt = utility_optimal(pair_d, U);
      const double eu = expected_utility(opt.e, pair_d.Q, U);
      uj.push_back(Json{{"utility", U.str()},
                        {"lambda", num(opt.lambda)},
                        {"expected_utility", num(eu)},
                        {"null_expectation", opt.null_expectation}});
      ut.rows.push_back({U.str(), num(opt.lambda), num(eu), opt.null_expectation});
      e_cols.emplace_back("e_" + U.str(), opt.e);
    } catch (const Error& e) {
      uj.push_back(Json{{"utility", U.str()}, {"error", e.what()}});
    }
  }
  out["utilities"] = uj;

  Table ev{{"outcome", "f_P", "f_Q", "p_log_optimal", "p_neyman_pearson"}, {}};
  for (const auto& [name, _] : e_cols) ev.columns.push_back(name);
  for (std::size_t x = 0; x < pair.size(); ++x) {
    std::vector<Json> row{pair.outcomes()[x], num(pair.P.prob(x)), num(pair.Q.prob(x)), num(p_log.values()[x]),
                          num(p_np[x])};
    for (const auto& [_, e] : e_cols) row.push_back(num(e.values()[x]));
    ev.rows.push_back(std::move(row));
  }
  ctx.add_table("optimal_evidence", std::move(ev));
  ctx.add_table("utilities", std::move(ut));
  return out;
}

template <Scalar T>
T alpha_param(const Context& ctx) {
  const T a = scalar_from_json<T>(ctx.param("alpha", "0.05"), "alpha");
  if (!(a > T(0) && a < T(1))) throw UsageError("alpha: must lie in (0, 1)");
  return a;
}

// --- merge ------------------------------------------------------------------

const char* default_family(const std::string& rule) {
  if (rule == "harmonic") return "preset:harmonic_dependent";
  if (rule == "geometric" || rule == "h_mean") return "preset:fwer_scaled";
  if (rule == "product") return "preset:bernoulli_product";
  if (rule == "pfunction_harmonic") return "preset:doubled_identity";
  if (rule == "pfunction_product") return "preset:identity_pair";
  return "preset:fwer_independent";
}

template <Scalar T>
std::vector<EvidenceVariable<T>> evidence_list(const Json& fam) {
  const Json& list = require(fam, "evidence", "family");
  if (!list.is_array() || list.empty()) throw FormatError("family.evidence: expected a nonempty array");
  std::vector<EvidenceVariable<T>> evs;
  for (std::size_t i = 0; i < list.size(); ++i)
    evs.push_back(evidence_from_json<T>(list[i], "family.evidence[" + std::to_string(i) + "]"));
  return evs;
}

template <Scalar T>
std::vector<T> weights_of(const Json& fam, const Context& ctx, std::size_t k) {
  Json w = ctx.param("weights", fam.value("weights", Json()));
  std::vector<T> out;
  if (w.is_null()) {
    for (std::size_t i = 0; i < k; ++i) out.push_back(T(1) / T(static_cast<long>(k)));
    return out;
  }
  if (!w.is_array()) throw FormatError("weights: expected an array");
  for (std::size_t i = 0; i < w.size(); ++i) out.push_back(scalar_from_json<T>(w[i], "weights[" + std::to_string(i) + "]"));
  return out;
}

template <Scalar T>
void evidence_table(Context& ctx, const EvidenceVariable<T>& ev) {
  Table t{{"outcome", "p", "e"}, {}};
  const auto p = ev.values_on(Scale::p_value);
  const auto e = ev.values_on(Scale::e_value);
  for (std::size_t x = 0; x < ev.size(); ++x) t.rows.push_back({ev.outcomes()[x], num(p[x]), num(e[x])});
  ctx.add_table("merged", std::move(t));
}

template <Scalar T>
void pfunction_table(Context& ctx, const std::string& name, const PFunction<T>& pf) {
  Table t{{"outcome", "u", "level"}, {}};
  for (std::size_t x = 0; x < pf.size(); ++x)
    for (const auto& s : pf.steps(x)) t.rows.push_back({pf.outcomes()[x], num(s.u), num(s.level)});
  ctx.add_table(name, std::move(t));
}

template <Scalar T>
void test_function_table(Context& ctx, const std::string& name, const RandomizedTestFunction<T>& tf) {
  Table t{{"outcome", "alpha", "value"}, {}};
  for (std::size_t x = 0; x < tf.size(); ++x)
    for (const auto& s : tf.steps(x)) t.rows.push_back({tf.outcomes()[x], num(s.alpha), num(s.value)});
  ctx.add_table(name, std::move(t));
}

template <Scalar T>
Json h_json(const HMean<T>& m) {
  return Json{{"value", num(m.value)}, {"exact", m.exact}};
}

template <Scalar T>
Json merge_impl(Context& ctx, const std::string& rule) {
  const auto ff = ctx.fixture("family", FixtureKind::family, default_family(rule));
  const Json& fam = ff.value;
  Json out{{"rule", rule}};

  if (rule == "product") {
    const Json& comps = require(fam, "components", "family");
    std::vector<ProductComponent<T>> pcs;
    Json inputs = Json::array();
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string w = "family.components[" + std::to_string(i) + "]";
      auto H = hypothesis_from_json<T>(require(comps[i], "hypothesis", w), w + ".hypothesis");
      auto ev = evidence_from_json<T>(require(comps[i], "evidence", w), w + ".evidence");
      inputs.push_back(validity_json(check_posthoc_validity(ev, H)));
      pcs.push_back({ev, H});
    }
    auto merged = merge_product_independent(pcs);
    out["inputs"] = inputs;
    out["merged"] = validity_json(check_posthoc_validity(merged.evidence, merged.hypothesis));
    evidence_table(ctx, merged.evidence);
    return out;
  }

  if (rule == "pfunction_harmonic" || rule == "pfunction_product") {
    const Json& list = require(fam, "pfunctions", "family");
    if (!list.is_array() || list.empty()) throw FormatError("family.pfunctions: expected a nonempty array");
    std::vector<PFunction<T>> pfs;
    std::vector<Hypothesis<T>> hyps;
    Json inputs = Json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = "family.pfunctions[" + std::to_string(i) + "]";
      pfs.push_back(pfunction_source_from_json<T>(list[i], w).pf);
      const Json& hj = fam.contains("hypotheses") ? fam["hypotheses"].at(i) : require(fam, "hypothesis", "family");
      hyps.push_back(hypothesis_from_json<T>(hj, w + ".hypothesis"));
      inputs.push_back(validity_json(check_pfunction_posthoc(pfs.back(), hyps.back())));
    }
    out["inputs"] = inputs;
    if (rule == "pfunction_harmonic") {
      auto merged = merge_pfunctions_harmonic(pfs, weights_of<T>(fam, ctx, pfs.size()));
      out["merged"] = validity_json(check_pfunction_posthoc(merged, hyps.front()));
      pfunction_table(ctx, "merged", merged);
      return out;
    }
    const auto shape = product_shape_condition(pfs);
    out["shape_condition"] =
        Json{{"holds", shape.holds}, {"witness_u", num(shape.witness_u)}, {"worst", num(shape.worst)}};
    if (shape.holds) {
      auto merged = merge_pfunctions_product(pfs);
      out["merged"] = validity_json(check_pfunction_posthoc(merged, product_hypothesis(hyps)));
      pfunction_table(ctx, "merged", merged);
    }
    return out;
  }

  const auto H = hypothesis_from_json<T>(require(fam, "hypothesis", "family"), "family.hypothesis");
  const auto evs = evidence_list<T>(fam);
  Json inputs = Json::array();

  if (rule == "h_mean") {
    const Json hj = ctx.param("h", "0");
    HIndex h = HIndex::parse(hj.is_string() ? hj.get<std::string>() : shortest_decimal(hj.get<double>()));
    const auto Hd = hypothesis_from_json<double>(require(fam, "hypothesis", "family"));
    const auto evd = evidence_list<double>(fam);
    for (const auto& e : evd) inputs.push_back(h_json(h_mean(e.on_scale(Scale::e_value), h, Hd)));
    auto merged = merge_h_mean(evd, weights_of<double>(fam, ctx, evd.size()), h);
    out["h"] = h.str();
    out["inputs"] = inputs;
    out["merged"] = h_json(h_mean(merged, h, Hd));
    out["merged"]["valid"] = check_h_validity(merged, h, Hd);
    evidence_table(ctx, merged);
    return out;
  }
  if (rule == "geometric") {
    for (const auto& e : evs) inputs.push_back(h_json(h_mean(e.on_scale(Scale::e_value), HIndex(0), H)));
    auto merged = merge_geometric(evs);
    out["inputs"] = inputs;
    out["merged"] = h_json(h_mean(merged, HIndex(0), H));
    out["merged"]["valid"] = check_h_validity(merged, HIndex(0), H);
    evidence_table(ctx, merged);
    return out;
  }

  for (const auto& e : evs) inputs.push_back(validity_json(check_posthoc_validity(e, H)));
  out["inputs"] = inputs;
  if (rule == "harmonic") {
    auto merged = merge_harmonic(evs, weights_of<T>(fam, ctx, evs.size()));
    out["merged"] = validity_json(check_posthoc_validity(merged, H));
    evidence_table(ctx, merged);
    return out;
  }
  std::vector<TestFunction<T>> tfs;
  for (const auto& e : evs) tfs.emplace_back(e);
  TestFamilyCollection<T> coll(tfs);
  if (rule == "fwer") {
    auto merged = fwer_merge(coll);
    out["merged"] = validity_json(check_posthoc_validity(merged.p(), H));
    evidence_table(ctx, merged.p());
    return out;
  }
  auto avg = fdr_average(coll, weights_of<T>(fam, ctx, evs.size()));
  out["merged"] = validity_json(check_test_function_posthoc(avg, H));
  test_function_table(ctx, "merged", avg);
  return out;
}

// --- pfunction --------------------------------------------------------------

template <Scalar T>
Json pfunction_impl(Context& ctx) {
  const auto pf_fix = ctx.fixture("pfunction", FixtureKind::pfunction, "preset:identity");
  const auto src = pfunction_source_from_json<T>(pf_fix.value);
  const auto H = hypothesis_from_json<T>(require(pf_fix.value, "hypothesis", "pfunction"));
  const auto& pf = src.pf;
  const auto tf = src.tf ? *src.tf : test_function_of(pf);

  Json out{{"source", src.kind}, {"randomized", pf.is_randomized()}};
  out["pfunction_statistic"] = validity_json(check_pfunction_posthoc(pf, H));
  out["test_function_statistic"] = validity_json(check_test_function_posthoc(tf, H));
  out["head"] = validity_json(check_posthoc_validity(p_value_head(pf), H));
  out["galois"] = Json{{"round_trip", pfunction_of(test_function_of(pf)) == pf},
                       {"adjunction", galois_adjunction_holds(tf, pf)}};
  if (pf.is_randomized()) {
    const Json max_n = ctx.param("max_n", 8);
    if (!max_n.is_number_integer() || max_n.get<long long>() < 1) throw UsageError("max_n: expected a positive integer");
    try {
      out["product_failure_witness"] =
          product_merge_failure_witness(pf, H.members().front(), max_n.get<std::size_t>());
    } catch (const Error& e) {
      out["product_failure_witness"] = Json{{"error", e.what()}};
    }
  }
  pfunction_table(ctx, "pfunction", pf);
  test_function_table(ctx, "test_function", tf);
  return out;
}

// --- sequential -------------------------------------------------------------

Json ville_json(const VilleReport& r) {
  return Json{{"rule", r.rule},
              {"class", to_string(r.process_class)},
              {"initial", r.initial},
              {"mean", r.mean},
              {"standard_error", r.standard_error},
              {"worst_member", r.worst_member},
              {"n", r.n},
              {"identity_holds", r.identity_holds},
              {"verdict", r.pass ? "PASS" : "FAIL"}};
}

std::vector<Json> ville_row(const VilleReport& r) {
  return {r.rule, r.initial, r.mean, r.standard_error, r.identity_holds, r.pass ? "PASS" : "FAIL"};
}

const std::vector<std::string> kVilleColumns{"rule", "initial", "mean", "standard_error", "identity_holds", "verdict"};

}  // namespace

Json run_distortion(Context& ctx) {
  return exact_backend(ctx.config()) ? distortion_impl<Rational>(ctx) : distortion_impl<double>(ctx);
}

Json run_optimal(Context& ctx) {
  const auto pf = ctx.fixture("pair", FixtureKind::pair, "preset:gaussian");
  if (is_generated_pair(pf.value)) {
    const auto pair = generated_pair(pf.value);
    Json out = optimal_core<double>(ctx, pair, pair, alpha_param<double>(ctx), pf.value);
    out["backend_effective"] = "float";
    return out;
  }
  const auto pair_d = pair_from_json<double>(pf.value);
  Json out;
  if (exact_backend(ctx.config())) {
    out = optimal_core<Rational>(ctx, pair_from_json<Rational>(pf.value), pair_d, alpha_param<Rational>(ctx), Json());
    out["backend_effective"] = "exact";
  } else {
    out = optimal_core<double>(ctx, pair_d, pair_d, alpha_param<double>(ctx), Json());
    out["backend_effective"] = "float";
  }
  return out;
}

Json run_merge(Context& ctx) {
  const Json rj = ctx.param("rule", "fwer");
  static const std::vector<std::string> rules{"harmonic", "geometric", "h_mean", "product", "fwer",
                                              "fdr", "pfunction_harmonic", "pfunction_product"};
  if (!rj.is_string() || std::find(rules.begin(), rules.end(), rj.get<std::string>()) == rules.end())
    throw UsageError("rule: expected one of harmonic, geometric, h_mean, product, fwer, fdr, pfunction_harmonic, "
                     "pfunction_product");
  const auto rule = rj.get<std::string>();
  return exact_backend(ctx.config()) ? merge_impl<Rational>(ctx, rule) : merge_impl<double>(ctx, rule);
}

Json run_pfunction(Context& ctx) {
  return exact_backend(ctx.config()) ? pfunction_impl<Rational>(ctx) : pfunction_impl<double>(ctx);
}

Json run_sequential(Context& ctx) {
  const auto mf = ctx.fixture("model", FixtureKind::model, "preset:martingale");
  const auto model = model_from_json(mf.value);
  const Json refs = array_param(
      ctx, "rules", Json::array({"preset:hitting2", "preset:immediate", "preset:fixed_horizon", "preset:falling_half"}));
  const auto seed = ctx.seed();
  const auto n = ctx.n(100000);
  std::vector<StoppingRule> rules;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto rf = ctx.fixture_at("rules[" + std::to_string(i) + "]", refs[i], FixtureKind::rule);
    rules.push_back(rule_from_json(rf.value, "rules[" + std::to_string(i) + "]"));
  }

  Json out{{"model", Json{{"class", to_string(model.process_class())}, {"horizon", model.horizon()}}}};
  Table vt{kVilleColumns, {}};
  Json ville = Json::array();
  bool all_pass = true;
  for (const auto& r : rules) {
    const auto rep = ville_equality_check(model, r, n, seed);
    ville.push_back(ville_json(rep));
    vt.rows.push_back(ville_row(rep));
    all_pass = all_pass && rep.pass;
  }
  out["ville"] = ville;

  std::vector<PathCollection> paths;
  for (std::size_t m = 0; m < model.members().size(); ++m) paths.push_back(simulate_paths(model, n, seed, m));
  const auto any = anytime_validity_check(paths, rules);
  Table at{{"member", "rule", "mean", "standard_error", "within"}, {}};
  Json cells = Json::array();
  for (const auto& c : any.cells) {
    cells.push_back(Json{{"member", c.member}, {"rule", c.rule}, {"mean", c.mean}, {"standard_error", c.standard_error},
                         {"within", c.within}});
    at.rows.push_back({c.member, c.rule, c.mean, c.standard_error, c.within});
  }
  out["anytime"] = Json{{"cells", cells}, {"sup_mean", any.sup_mean}, {"valid", any.valid}};
  out["verdict"] = all_pass && any.valid ? "PASS" : "FAIL";

  const Json dump = ctx.param("dump_paths", 0);
  if (!dump.is_number_integer() || dump.get<long long>() < 0) throw UsageError("dump_paths: expected an integer >= 0");
  if (const auto k = dump.get<std::size_t>(); k > 0) {
    Table pt{{"path_id", "t", "M_t"}, {}};
    for (std::size_t i = 0; i < std::min<std::size_t>(k, paths.front().n); ++i) {
      auto p = paths.front().path(i);
      for (std::size_t t = 0; t < p.size(); ++t) pt.rows.push_back({i, t, p[t]});
    }
    ctx.add_table("paths", std::move(pt));
  }
  ctx.add_table("ville", std::move(vt));
  ctx.add_table("anytime", std::move(at));
  return out;
}

Json run_ville(Context& ctx) {
  const auto mf = ctx.fixture("model", FixtureKind::model, "preset:martingale");
  const auto model = model_from_json(mf.value);
  const auto rf = ctx.fixture("rule", FixtureKind::rule, "preset:hitting2");
  const auto rule = rule_from_json(rf.value);
  const auto rep = ville_equality_check(model, rule, ctx.n(100000), ctx.seed());
  ctx.add_table("ville", Table{kVilleColumns, {ville_row(rep)}});
  Json out = ville_json(rep);
  return out;
}

}  // namespace posthoc::cli::detail
