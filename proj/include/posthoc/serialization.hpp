#pragma once

// JSON encoding of the core types. Exact values are written as strings
// ("4/99", "inf"); floats as JSON numbers. Readers accept both, and a JSON
// number is read through its shortest decimal form, so 0.1 becomes 1/10 on
// the rational backend.

#include "posthoc/distortion.hpp"
#include "posthoc/evidence_core.hpp"
#include "posthoc/optimal_design.hpp"
#include "posthoc/pfunctions.hpp"
#include "posthoc/sequential.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace posthoc {

using Json = nlohmann::json;

/// Parse failure in a structured input; carries the JSON path.
class FormatError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

template <Scalar T>
Json scalar_to_json(const T& v) {
  if constexpr (ScalarTraits<T>::exact) {
    return Json(v.str());
  } else {
    return Json(v);
  }
}

template <Scalar T>
Json extended_to_json(const Extended<T>& v) {
  if (v.is_infinite()) return Json("inf");
  return scalar_to_json(v.finite());
}

/// Shortest round-trip decimal of a double.
std::string shortest_decimal(double v);

template <Scalar T>
T scalar_from_json(const Json& j, const std::string& where) {
  try {
    if (j.is_string()) return parse_scalar<T>(j.get<std::string>());
    if (j.is_number_integer()) return T(j.get<long long>());
    if (j.is_number()) return parse_scalar<T>(shortest_decimal(j.get<double>()));
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
  throw FormatError(where + ": expected a number or numeric string");
}

template <Scalar T>
Extended<T> extended_from_json(const Json& j, const std::string& where) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return Extended<T>::infinity();
  }
  T v = scalar_from_json<T>(j, where);
  if (v < T(0)) throw FormatError(where + ": negative value");
  return Extended<T>(v);
}

const Json& require(const Json& j, const char* key, const std::string& where);
std::vector<OutcomeId> outcomes_from_json(const Json& j, const std::string& where);

template <Scalar T>
Json to_json(const DiscreteSpace<T>& s) {
  Json probs = Json::array();
  for (const auto& p : s.probs()) probs.push_back(scalar_to_json(p));
  return Json{{"outcomes", s.outcomes()}, {"probs", probs}};
}

template <Scalar T>
DiscreteSpace<T> space_from_json(const Json& j, const std::string& where = "space") {
  auto ids = outcomes_from_json(require(j, "outcomes", where), where + ".outcomes");
  const Json& pj = require(j, "probs", where);
  if (!pj.is_array()) throw FormatError(where + ".probs: expected an array");
  std::vector<T> probs;
  for (std::size_t i = 0; i < pj.size(); ++i)
    probs.push_back(scalar_from_json<T>(pj[i], where + ".probs[" + std::to_string(i) + "]"));
  try {
    return DiscreteSpace<T>(std::move(ids), std::move(probs));
  } catch (const FormatError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

template <Scalar T>
Json to_json(const Hypothesis<T>& h) {
  if (h.size() == 1) return to_json(h.members().front());
  Json m = Json::array();
  for (const auto& s : h.members()) m.push_back(to_json(s));
  return Json{{"members", m}};
}

template <Scalar T>
Hypothesis<T> hypothesis_from_json(const Json& j, const std::string& where = "hypothesis") {
  if (j.is_object() && j.contains("members")) {
    const Json& m = j["members"];
    if (!m.is_array() || m.empty()) throw FormatError(where + ".members: expected a nonempty array");
    std::vector<DiscreteSpace<T>> members;
    for (std::size_t i = 0; i < m.size(); ++i)
      members.push_back(space_from_json<T>(m[i], where + ".members[" + std::to_string(i) + "]"));
    try {
      return Hypothesis<T>(std::move(members));
    } catch (const InvalidArgument& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return Hypothesis<T>(space_from_json<T>(j, where));
}

template <Scalar T>
Json to_json(const EvidenceVariable<T>& ev) {
  Json vals = Json::array();
  for (const auto& v : ev.values()) vals.push_back(extended_to_json(v));
  return Json{{"outcomes", ev.outcomes()}, {"values", vals}, {"scale", to_string(ev.scale())}};
}

Scale scale_from_json(const Json& j, const std::string& where);

template <Scalar T>
EvidenceVariable<T> evidence_from_json(const Json& j, const std::string& where = "evidence") {
  auto ids = outcomes_from_json(require(j, "outcomes", where), where + ".outcomes");
  const Json& vj = require(j, "values", where);
  if (!vj.is_array()) throw FormatError(where + ".values: expected an array");
  std::vector<Extended<T>> vals;
  for (std::size_t i = 0; i < vj.size(); ++i)
    vals.push_back(extended_from_json<T>(vj[i], where + ".values[" + std::to_string(i) + "]"));
  const Scale s = scale_from_json(require(j, "scale", where), where + ".scale");
  try {
    return EvidenceVariable<T>(std::move(ids), std::move(vals), s);
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

template <Scalar T>
Json to_json(const PValueLaw<T>& law) {
  Json atoms = Json::array(), pieces = Json::array();
  for (const auto& a : law.atoms()) atoms.push_back(Json::array({extended_to_json(a.location), scalar_to_json(a.mass)}));
  for (const auto& p : law.pieces())
    pieces.push_back(Json::array({scalar_to_json(p.lower), scalar_to_json(p.upper), scalar_to_json(p.mass)}));
  return Json{{"atoms", atoms}, {"pieces", pieces}};
}

template <Scalar T>
PValueLaw<T> law_from_json(const Json& j, const std::string& where = "law") {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  std::vector<Atom<T>> atoms;
  std::vector<Piece<T>> pieces;
  if (j.contains("atoms")) {
    const Json& a = j["atoms"];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string w = where + ".atoms[" + std::to_string(i) + "]";
      if (!a[i].is_array() || a[i].size() != 2) throw FormatError(w + ": expected [location, mass]");
      atoms.push_back({extended_from_json<T>(a[i][0], w + "[0]"), scalar_from_json<T>(a[i][1], w + "[1]")});
    }
  }
  if (j.contains("pieces")) {
    const Json& p = j["pieces"];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string w = where + ".pieces[" + std::to_string(i) + "]";
      if (!p[i].is_array() || p[i].size() != 3) throw FormatError(w + ": expected [lower, upper, mass]");
      pieces.push_back({scalar_from_json<T>(p[i][0], w + "[0]"), scalar_from_json<T>(p[i][1], w + "[1]"),
                        scalar_from_json<T>(p[i][2], w + "[2]")});
    }
  }
  try {
    return PValueLaw<T>(std::move(atoms), std::move(pieces));
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

template <Scalar T>
Json to_json(const AlphaStrategy<T>& s) {
  Json b = Json::array(), l = Json::array();
  for (const auto& x : s.breakpoints()) b.push_back(scalar_to_json(x));
  for (const auto& x : s.levels()) l.push_back(x ? scalar_to_json(*x) : Json("p"));
  return Json{{"breakpoints", b}, {"levels", l}};
}

template <Scalar T>
AlphaStrategy<T> strategy_from_json(const Json& j, const std::string& where = "strategy") {
  std::vector<T> b;
  std::vector<StrategyLevel<T>> l;
  const Json& bj = j.contains("breakpoints") ? j["breakpoints"] : Json::array();
  for (std::size_t i = 0; i < bj.size(); ++i)
    b.push_back(scalar_from_json<T>(bj[i], where + ".breakpoints[" + std::to_string(i) + "]"));
  const Json& lj = require(j, "levels", where);
  for (std::size_t i = 0; i < lj.size(); ++i) {
    if (lj[i].is_string() && lj[i].get<std::string>() == "p") l.push_back(std::nullopt);
    else l.push_back(scalar_from_json<T>(lj[i], where + ".levels[" + std::to_string(i) + "]"));
  }
  try {
    return AlphaStrategy<T>(std::move(b), std::move(l));
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

template <Scalar T>
Json to_json(const PFunction<T>& pf) {
  Json steps = Json::array();
  for (std::size_t x = 0; x < pf.size(); ++x) {
    Json s = Json::array();
    for (const auto& st : pf.steps(x)) s.push_back(Json::array({scalar_to_json(st.u), extended_to_json(st.level)}));
    steps.push_back(s);
  }
  return Json{{"outcomes", pf.outcomes()}, {"steps", steps}};
}

template <Scalar T>
PFunction<T> pfunction_from_json(const Json& j, const std::string& where = "pfunction") {
  auto ids = outcomes_from_json(require(j, "outcomes", where), where + ".outcomes");
  const Json& sj = require(j, "steps", where);
  std::vector<std::vector<PStep<T>>> steps;
  for (std::size_t x = 0; x < sj.size(); ++x) {
    std::vector<PStep<T>> s;
    for (std::size_t k = 0; k < sj[x].size(); ++k) {
      const std::string w = where + ".steps[" + std::to_string(x) + "][" + std::to_string(k) + "]";
      if (!sj[x][k].is_array() || sj[x][k].size() != 2) throw FormatError(w + ": expected [u, level]");
      s.push_back({scalar_from_json<T>(sj[x][k][0], w + "[0]"), extended_from_json<T>(sj[x][k][1], w + "[1]")});
    }
    steps.push_back(std::move(s));
  }
  try {
    return PFunction<T>(std::move(ids), std::move(steps));
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

template <Scalar T>
Json to_json(const RandomizedTestFunction<T>& tf) {
  Json steps = Json::array();
  for (std::size_t x = 0; x < tf.size(); ++x) {
    Json s = Json::array();
    for (const auto& st : tf.steps(x)) s.push_back(Json::array({scalar_to_json(st.alpha), scalar_to_json(st.value)}));
    steps.push_back(s);
  }
  return Json{{"outcomes", tf.outcomes()}, {"steps", steps}};
}

template <Scalar T>
struct PFunctionSource {
  std::string kind;  // "steps", "randomize" or "soft"
  PFunction<T> pf;
  /// The soft test function itself when kind == "soft".
  std::optional<RandomizedTestFunction<T>> tf;
};

/// {"outcomes", "steps"}, {"randomize": p-evidence, "grid": m} or
/// {"soft": e-evidence, "grid": m}; the grid is 1/m, ..., 1 (default 100).
template <Scalar T>
PFunctionSource<T> pfunction_source_from_json(const Json& j, const std::string& where = "pfunction") {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  std::size_t m = 100;
  if (j.contains("grid")) {
    if (!j["grid"].is_number_integer() || j["grid"].get<long long>() < 1)
      throw FormatError(where + ".grid: expected a positive integer");
    m = j["grid"].get<std::size_t>();
  }
  if (j.contains("randomize")) {
    auto p = evidence_from_json<T>(j["randomize"], where + ".randomize");
    return {"randomize", uniform_randomize(p, uniform_grid<T>(m)), std::nullopt};
  }
  if (j.contains("soft")) {
    auto e = evidence_from_json<T>(j["soft"], where + ".soft");
    auto tf = soft_test_function(e, uniform_grid<T>(m));
    return {"soft", pfunction_of(tf), tf};
  }
  return {"steps", pfunction_from_json<T>(j, where), std::nullopt};
}

template <Scalar T>
Json to_json(const SimplePair<T>& pair) {
  return Json{{"P", to_json(pair.P)}, {"Q", to_json(pair.Q)}};
}

template <Scalar T>
SimplePair<T> pair_from_json(const Json& j, const std::string& where = "pair") {
  auto P = space_from_json<T>(require(j, "P", where), where + ".P");
  auto Q = space_from_json<T>(require(j, "Q", where), where + ".Q");
  try {
    return SimplePair<T>(std::move(P), Q);
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

Json to_json(const ProcessModel& m);
ProcessModel model_from_json(const Json& j, const std::string& where = "model");
StoppingRule rule_from_json(const Json& j, const std::string& where = "rule");

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Hash of the canonical (sorted-key, compact) dump of a fixture.
std::string fixture_hash(const Json& j);

/// RFC 4180 field quoting when needed.
std::string csv_field(std::string_view s);

template <Scalar T>
std::string distortion_csv(const DistortionReport<T>& r) {
  std::string out = "level,mass,size,distortion\n";
  for (const auto& row : r.per_level)
    out += format(row.level) + "," + format(row.mass) + "," + format(row.size) + "," + format(row.distortion) + "\n";
  return out;
}

}  // namespace posthoc
