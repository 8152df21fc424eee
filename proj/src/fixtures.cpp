#include "posthoc/fixtures.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace posthoc {

namespace {

using R = Rational;

R lit(const char* s) { return parse_rational(s); }

Json space(std::vector<OutcomeId> ids, std::vector<const char*> probs) {
  std::vector<R> p;
  for (auto s : probs) p.push_back(lit(s));
  return to_json(DiscreteSpace<R>(std::move(ids), std::move(p)));
}

Json ev(std::vector<OutcomeId> ids, std::vector<const char*> vals, Scale s) {
  std::vector<Extended<R>> v;
  for (auto x : vals) v.push_back(std::string_view(x) == "inf" ? Extended<R>::infinity() : Extended<R>(lit(x)));
  return to_json(EvidenceVariable<R>(std::move(ids), std::move(v), s));
}

Json model(double m0, std::vector<std::pair<std::vector<double>, std::vector<double>>> inc, const char* cls,
           int horizon) {
  Json incs = Json::array();
  for (auto& [v, p] : inc) incs.push_back(Json{{"values", v}, {"probs", p}});
  return Json{{"m0", m0}, {"increments", incs}, {"class", cls}, {"horizon", horizon}};
}

std::map<std::string, Preset> build() {
  std::map<std::string, Preset> m;
  auto add = [&](const char* name, FixtureKind k, const char* desc, Json v) { m[name] = {k, desc, std::move(v)}; };

  add("exact", FixtureKind::law, "p ~ Unif(0, 1]", to_json(presets::exact_law<R>()));
  add("valid_hacking", FixtureKind::law, "Unif(0, 1) w.p. 1/2, atom at 1 w.p. 1/2",
      to_json(presets::valid_hacking_law<R>()));
  add("point_one", FixtureKind::law, "p = 1", to_json(PValueLaw<R>::point(Extended<R>(R(1)))));
  add("atom_half", FixtureKind::law, "p = 0.5", to_json(PValueLaw<R>::point(Extended<R>(lit("0.5")))));
  add("atom_small", FixtureKind::law, "mass 0.1 at 0.01, 0.9 at 1",
      to_json(PValueLaw<R>({{Extended<R>(lit("0.01")), lit("0.1")}, {Extended<R>(R(1)), lit("0.9")}}, {})));

  add("decreasing_alpha", FixtureKind::strategy, ".01 if p <= .01, else .05", to_json(presets::decreasing_alpha<R>()));
  add("conservative", FixtureKind::strategy, ".02 if p <= .01, else .01", to_json(presets::conservative<R>()));
  add("fragility_04", FixtureKind::strategy, ".04 if p <= .04, else .05", to_json(presets::fragility<R>(lit("0.04"))));
  add("constant_05", FixtureKind::strategy, "always .05", to_json(AlphaStrategy<R>::constant(lit("0.05"))));
  add("level_p", FixtureKind::strategy, "reject at level p", to_json(AlphaStrategy<R>::level_p()));

  const std::vector<OutcomeId> ab{"a", "b"};
  add("markov_half", FixtureKind::evidence, "X in {.5, 1.5} w.p. 1/2",
      Json{{"hypothesis", space(ab, {"1/2", "1/2"})}, {"evidence", ev(ab, {"0.5", "1.5"}, Scale::e_value)}});
  add("markov_zero_two", FixtureKind::evidence, "X in {0, 2} w.p. 1/2",
      Json{{"hypothesis", space(ab, {"1/2", "1/2"})}, {"evidence", ev(ab, {"0", "2"}, Scale::e_value)}});
  add("markov_atom_ten", FixtureKind::evidence, "X = 10 w.p. .05, else 0",
      Json{{"hypothesis", space(ab, {"0.05", "0.95"})}, {"evidence", ev(ab, {"10", "0"}, Scale::e_value)}});
  add("geometric_quarter", FixtureKind::evidence, "e in {4, 1/4} w.p. 1/2",
      Json{{"hypothesis", space(ab, {"1/2", "1/2"})}, {"evidence", ev(ab, {"4", "1/4"}, Scale::e_value)}});

  const std::vector<OutcomeId> four{"00", "01", "10", "11"};
  const Json uniform4 = space(four, {"1/4", "1/4", "1/4", "1/4"});
  add("fwer_independent", FixtureKind::family, "two independent e-values in {0, 2}; E[max e] = 3/2",
      Json{{"hypothesis", uniform4},
           {"evidence", Json::array({ev(four, {"0", "0", "2", "2"}, Scale::e_value),
                                     ev(four, {"0", "2", "0", "2"}, Scale::e_value)})}});
  add("fwer_scaled", FixtureKind::family, "two independent e-values in {0, 4/3}; E[max e] = 1",
      Json{{"hypothesis", uniform4},
           {"evidence", Json::array({ev(four, {"0", "0", "4/3", "4/3"}, Scale::e_value),
                                     ev(four, {"0", "4/3", "0", "4/3"}, Scale::e_value)})}});
  const std::vector<OutcomeId> three{"x", "y", "z"};
  add("harmonic_dependent", FixtureKind::family, "three dependent post-hoc p-values on three outcomes",
      Json{{"hypothesis", space(three, {"1/2", "1/4", "1/4"})},
           {"evidence", Json::array({ev(three, {"2", "1/2", "inf"}, Scale::p_value),
                                     ev(three, {"inf", "1/2", "1/2"}, Scale::p_value),
                                     ev(three, {"1", "1", "1"}, Scale::p_value)})},
           {"weights", Json::array({"1/2", "1/4", "1/4"})}});

  auto bern = bernoulli_pair<R>(lit("0.5"), lit("0.75"));
  const Json lr = to_json(dual(log_optimal(bern)));
  add("bernoulli_product", FixtureKind::family, "two independent Bernoulli likelihood-ratio e-values",
      Json{{"components", Json::array({Json{{"hypothesis", to_json(bern.P)}, {"evidence", lr}},
                                       Json{{"hypothesis", to_json(bern.P)}, {"evidence", lr}}})}});
  const std::vector<OutcomeId> single{"x"};
  const Json point = space(single, {"1"});
  add("doubled_identity", FixtureKind::family, "two copies of p~(u) = 2u, weights 1/2",
      Json{{"hypothesis", point},
           {"pfunctions", Json::array({Json{{"randomize", ev(single, {"2"}, Scale::p_value)}, {"grid", 100}},
                                       Json{{"randomize", ev(single, {"2"}, Scale::p_value)}, {"grid", 100}}})},
           {"weights", Json::array({"1/2", "1/2"})}});
  add("identity_pair", FixtureKind::family, "two independent copies of p~(u) = u",
      Json{{"hypothesis", point},
           {"pfunctions", Json::array({Json{{"randomize", ev(single, {"1"}, Scale::p_value)}, {"grid", 4}},
                                       Json{{"randomize", ev(single, {"1"}, Scale::p_value)}, {"grid", 4}}})}});

  add("bernoulli", FixtureKind::pair, "Bern(.5) against Bern(.75)", to_json(bern));
  add("np_knapsack", FixtureKind::pair, "four outcomes where the best level-.35 region is not an LR region",
      to_json(np_knapsack_pair<R>()));
  add("gaussian", FixtureKind::pair, "N(0,1) against N(1,1), 2001 equal-mass cells",
      Json{{"generator", "gaussian"}, {"cells", 2001}, {"shift", 1.0}});

  add("martingale", FixtureKind::model, "Z in {.5, 1.5} w.p. 1/2, T = 50",
      model(1.0, {{{0.5, 1.5}, {0.5, 0.5}}}, "martingale", 50));
  add("supermartingale", FixtureKind::model, "Z in {.5, 1.4} w.p. 1/2, T = 50",
      model(1.0, {{{0.5, 1.4}, {0.5, 0.5}}}, "supermartingale", 50));
  add("invalid_process", FixtureKind::model, "Z in {.6, 1.6} w.p. 1/2 (E[Z] = 1.1), T = 50",
      model(1.0, {{{0.6, 1.6}, {0.5, 0.5}}}, "unrestricted", 50));
  add("eprocess_pair", FixtureKind::model, "two null members, E[Z] = 1 and E[Z] = .95, T = 50",
      model(1.0, {{{0.5, 1.5}, {0.5, 0.5}}, {{0.5, 1.4}, {0.5, 0.5}}}, "eprocess", 50));
  add("constant_process", FixtureKind::model, "Z = 1, T = 10", model(1.0, {{{1.0}, {1.0}}}, "martingale", 10));

  add("hitting2", FixtureKind::rule, "first t with M_t >= 2, capped at 50",
      Json{{"kind", "hitting"}, {"level", 2.0}, {"cap", 50}});
  add("immediate", FixtureKind::rule, "tau = 0", Json{{"kind", "immediate"}});
  add("fixed_horizon", FixtureKind::rule, "tau = 50", Json{{"kind", "fixed"}, {"t", 50}});
  add("falling_half", FixtureKind::rule, "first t with M_t <= 1/2, capped at 50",
      Json{{"kind", "falling"}, {"level", 0.5}, {"cap", 50}});

  const std::vector<OutcomeId> one{"x"};
  add("identity", FixtureKind::pfunction, "p~(u) = u on a single outcome (uniform randomization of p = 1)",
      Json{{"hypothesis", space(one, {"1"})}, {"randomize", ev(one, {"1"}, Scale::p_value)}, {"grid", 100}});
  add("randomized_bernoulli", FixtureKind::pfunction, "u p* for the Bernoulli log-optimal p-value",
      Json{{"hypothesis", to_json(bern.P)}, {"randomize", to_json(log_optimal(bern))}, {"grid", 100}});
  add("soft_bernoulli", FixtureKind::pfunction, "min(alpha e*, 1) for the Bernoulli likelihood ratio",
      Json{{"hypothesis", to_json(bern.P)}, {"soft", to_json(dual(log_optimal(bern)))}, {"grid", 100}});
  return m;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

const char* to_string(FixtureKind k) {
  switch (k) {
    case FixtureKind::law:
      return "law";
    case FixtureKind::strategy:
      return "strategy";
    case FixtureKind::evidence:
      return "evidence";
    case FixtureKind::family:
      return "family";
    case FixtureKind::pair:
      return "pair";
    case FixtureKind::model:
      return "model";
    case FixtureKind::rule:
      return "rule";
    case FixtureKind::pfunction:
      return "pfunction";
  }
  return "?";
}

const std::map<std::string, Preset>& fixture_presets() {
  static const std::map<std::string, Preset> table = build();
  return table;
}

ResolvedFixture resolve_fixture(const Json& ref, FixtureKind kind, const std::string& base_dir) {
  if (ref.is_object()) return {"inline", ref, fixture_hash(ref)};
  if (!ref.is_string()) throw FormatError(std::string("expected a ") + to_string(kind) + " fixture reference");
  const auto text = ref.get<std::string>();
  if (text.rfind("preset:", 0) == 0) {
    const auto name = text.substr(7);
    auto it = fixture_presets().find(name);
    if (it == fixture_presets().end()) throw FixtureMissing(text);
    if (it->second.kind != kind)
      throw FormatError(text + " is a " + to_string(it->second.kind) + " fixture, expected " + to_string(kind));
    return {text, it->second.value, fixture_hash(it->second.value)};
  }
  namespace fs = std::filesystem;
  fs::path p(text);
  if (p.is_relative() && fs::exists(fs::path(base_dir) / p)) p = fs::path(base_dir) / p;
  if (!fs::is_regular_file(p)) throw FixtureMissing(text);
  Json v = read_json_file(p);
  return {text, v, fixture_hash(v)};
}

bool is_generated_pair(const Json& j) { return j.is_object() && j.contains("generator"); }

SimplePair<double> generated_pair(const Json& j) {
  const Json& g = require(j, "generator", "pair");
  if (g != "gaussian") throw FormatError("pair.generator: only \"gaussian\" is supported");
  const int cells = j.value("cells", 2001);
  if (cells < 2) throw FormatError("pair.cells: must be >= 2");
  const double shift = j.contains("shift") ? scalar_from_json<double>(j["shift"], "pair.shift") : 1.0;
  return gaussian_pair(static_cast<std::size_t>(cells), shift);
}

}  // namespace posthoc
