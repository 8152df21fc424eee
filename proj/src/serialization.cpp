#include "posthoc/serialization.hpp"

#include <charconv>
#include <cstdio>

namespace posthoc {

std::string shortest_decimal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(where + ": missing key '" + key + "'");
  return *it;
}

std::vector<OutcomeId> outcomes_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of outcome ids");
  std::vector<OutcomeId> ids;
  for (const auto& x : j) {
    if (x.is_string()) ids.push_back(x.get<std::string>());
    else if (x.is_number_integer()) ids.push_back(std::to_string(x.get<long long>()));
    else throw FormatError(where + ": outcome ids must be strings or integers");
  }
  return ids;
}

Scale scale_from_json(const Json& j, const std::string& where) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "e") return Scale::e_value;
    if (s == "p") return Scale::p_value;
  }
  throw FormatError(where + ": scale must be \"e\" or \"p\"");
}

namespace {

double number_from_json(const Json& j, const std::string& where) {
  return scalar_from_json<double>(j, where);
}

int int_from_json(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw FormatError(where + ": expected an integer");
  return j.get<int>();
}

}  // namespace

Json to_json(const ProcessModel& m) {
  Json inc = Json::array();
  for (const auto& z : m.members()) inc.push_back(Json{{"values", z.values}, {"probs", z.probs}});
  return Json{{"m0", m.initial()}, {"increments", inc}, {"class", to_string(m.process_class())}, {"horizon", m.horizon()}};
}

ProcessModel model_from_json(const Json& j, const std::string& where) {
  const double m0 = j.contains("m0") ? number_from_json(j["m0"], where + ".m0") : 1.0;
  const Json& inc = require(j, "increments", where);
  if (!inc.is_array() || inc.empty()) throw FormatError(where + ".increments: expected a nonempty array");
  std::vector<IncrementLaw> laws;
  for (std::size_t m = 0; m < inc.size(); ++m) {
    const std::string w = where + ".increments[" + std::to_string(m) + "]";
    std::vector<double> v, p;
    const Json& vj = require(inc[m], "values", w);
    const Json& pj = require(inc[m], "probs", w);
    for (std::size_t i = 0; i < vj.size(); ++i) v.push_back(number_from_json(vj[i], w + ".values"));
    for (std::size_t i = 0; i < pj.size(); ++i) p.push_back(number_from_json(pj[i], w + ".probs"));
    try {
      laws.emplace_back(std::move(v), std::move(p));
    } catch (const InvalidArgument& e) {
      throw FormatError(w + ": " + e.what());
    }
  }
  const Json& cj = require(j, "class", where);
  if (!cj.is_string()) throw FormatError(where + ".class: expected a string");
  const int horizon = int_from_json(require(j, "horizon", where), where + ".horizon");
  try {
    return ProcessModel(m0, std::move(laws), parse_process_class(cj.get<std::string>()), horizon);
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

StoppingRule rule_from_json(const Json& j, const std::string& where) {
  const Json& kj = require(j, "kind", where);
  if (!kj.is_string()) throw FormatError(where + ".kind: expected a string");
  const auto kind = kj.get<std::string>();
  if (kind == "immediate") return StoppingRule::immediate();
  if (kind == "fixed") return StoppingRule::fixed(int_from_json(require(j, "t", where), where + ".t"));
  if (kind == "hitting" || kind == "falling") {
    const double level = number_from_json(require(j, "level", where), where + ".level");
    const int cap = int_from_json(require(j, "cap", where), where + ".cap");
    if (cap < 0) throw FormatError(where + ".cap: must be >= 0");
    return kind == "hitting" ? StoppingRule::hitting(level, cap) : StoppingRule::falling(level, cap);
  }
  throw FormatError(where + ".kind: unknown stopping rule '" + kind + "'");
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fixture_hash(const Json& j) { return fnv1a_hex(j.dump()); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace posthoc
