#pragma once

#include "posthoc/cli.hpp"

#include <string>

namespace posthoc::cli::detail {

/// Per-run state: the config, resolved fixture hashes and output tables.
class Context {
public:
  explicit Context(const ExperimentConfig& cfg) : cfg_(cfg) {}

  const ExperimentConfig& config() const { return cfg_; }

  Json param(const char* key, Json fallback) const {
    auto it = cfg_.params.find(key);
    return it == cfg_.params.end() ? fallback : *it;
  }

  /// Resolves params[key] (or `fallback`) and records its hash under `key`.
  ResolvedFixture fixture(const char* key, FixtureKind kind, const char* fallback) {
    return record(key, resolve_fixture(param(key, fallback), kind, cfg_.base_dir));
  }

  ResolvedFixture fixture_at(const std::string& label, const Json& ref, FixtureKind kind) {
    return record(label, resolve_fixture(ref, kind, cfg_.base_dir));
  }

  std::uint64_t seed() const {
    if (!cfg_.seed) throw UsageError(cfg_.kind + ": Monte Carlo needs a seed (--seed, EVALID_SEED or \"seed\" in the config)");
    return *cfg_.seed;
  }
  std::uint64_t n(std::uint64_t fallback) const { return cfg_.n.value_or(fallback); }

  void add_table(const std::string& name, Table t) { tables_[name] = std::move(t); }

  const Json& fixtures() const { return fixtures_; }
  std::map<std::string, Table>& tables() { return tables_; }

private:
  ResolvedFixture record(const std::string& label, ResolvedFixture f) {
    fixtures_[label] = Json{{"ref", f.ref}, {"hash", f.hash}};
    return f;
  }

  const ExperimentConfig& cfg_;
  Json fixtures_ = Json::object();
  std::map<std::string, Table> tables_;
};

/// Display name for a fixture reference: preset name, file stem or "<fallback>".
std::string label_of(const Json& ref, const std::string& fallback);

template <Scalar T>
Json num(const T& v) {
  return scalar_to_json(v);
}

template <Scalar T>
Json num(const Extended<T>& v) {
  return extended_to_json(v);
}

inline Json num(double v) {
  if (std::isinf(v)) return Json(v > 0 ? "inf" : "-inf");
  return Json(v);
}

bool exact_backend(const ExperimentConfig& cfg);

Json run_distortion(Context& ctx);
Json run_optimal(Context& ctx);
Json run_merge(Context& ctx);
Json run_pfunction(Context& ctx);
Json run_sequential(Context& ctx);
Json run_ville(Context& ctx);

}  // namespace posthoc::cli::detail
