#pragma once

// Named fixtures shipped with the library, stored as JSON so the CLI can
// resolve "preset:<name>" references the same way it reads fixture files.

#include "posthoc/serialization.hpp"

#include <map>
#include <string>
#include <vector>

namespace posthoc {

enum class FixtureKind { law, strategy, evidence, family, pair, model, rule, pfunction };

const char* to_string(FixtureKind k);

struct Preset {
  FixtureKind kind;
  std::string description;
  Json value;
};

/// Every preset, keyed by name.
const std::map<std::string, Preset>& fixture_presets();

/// Thrown when a referenced preset or file does not exist.
class FixtureMissing : public Error {
public:
  explicit FixtureMissing(const std::string& ref) : Error("fixture not found: " + ref), ref_(ref) {}
  const std::string& ref() const { return ref_; }

private:
  std::string ref_;
};

struct ResolvedFixture {
  std::string ref;  // as written, or "inline"
  Json value;
  std::string hash;
};

/// Resolves "preset:<name>", a JSON file path (relative paths are tried
/// against `base_dir` first), or an inline object. A preset of the wrong
/// kind is a FormatError.
ResolvedFixture resolve_fixture(const Json& ref, FixtureKind kind, const std::string& base_dir = ".");

/// A fixture pair: either {"P", "Q"} or {"generator": "gaussian", "cells",
/// "shift"}. Generated pairs exist only on the float backend.
bool is_generated_pair(const Json& j);
SimplePair<double> generated_pair(const Json& j);

/// The four-outcome pair on which the best level-0.35 region is not a
/// likelihood-ratio region: {A} has size .3 and power .6, {A, C} has size
/// .35 and power .65.
template <Scalar T>
SimplePair<T> np_knapsack_pair() {
  auto lit = [](const char* s) { return parse_scalar<T>(s); };
  return SimplePair<T>(DiscreteSpace<T>({"A", "B", "C", "D"}, {lit("0.3"), lit("0.1"), lit("0.05"), lit("0.55")}),
                       DiscreteSpace<T>({"A", "B", "C", "D"}, {lit("0.6"), lit("0.15"), lit("0.05"), lit("0.2")}));
}

}  // namespace posthoc
