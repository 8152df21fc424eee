#include "internal.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace posthoc::cli {

namespace fs = std::filesystem;
using detail::Context;

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"distortion", "optimal", "merge", "pfunction",
                                              "sequential", "ville",   "examples"};
  return kinds;
}

namespace {

const std::set<std::string> kCommonKeys{"kind", "seed", "n", "out", "backend", "format", "params"};

const std::map<std::string, std::set<std::string>>& param_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"distortion", {"law", "strategies", "monte_carlo"}},
      {"optimal", {"pair", "alpha", "utilities"}},
      {"merge", {"rule", "family", "weights", "h"}},
      {"pfunction", {"pfunction", "max_n"}},
      {"sequential", {"model", "rules", "dump_paths"}},
      {"ville", {"model", "rule"}},
      {"examples", {}},
  };
  return keys;
}

std::uint64_t u64_of(const Json& v, const char* key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  throw UsageError(std::string(key) + ": expected an unsigned 64-bit integer");
}

std::string string_of(const Json& v, const char* key) {
  if (!v.is_string()) throw UsageError(std::string(key) + ": expected a string");
  return v.get<std::string>();
}

std::string cell_text(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_field(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("cannot write " + path.string());
}

Json error_json(const char* code, const std::string& message) {
  return Json{{"error", Json{{"code", code}, {"message", message}}}};
}

}  // namespace

ExperimentConfig config_from_json(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  if (j.contains("kind")) cfg.kind = string_of(j["kind"], "kind");
  if (j.contains("seed")) cfg.seed = u64_of(j["seed"], "seed");
  if (j.contains("n")) cfg.n = u64_of(j["n"], "n");
  if (j.contains("out")) cfg.out_dir = string_of(j["out"], "out");
  if (j.contains("backend")) cfg.backend = string_of(j["backend"], "backend");
  if (j.contains("format")) cfg.format = string_of(j["format"], "format");
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw UsageError("params: expected an object");
    cfg.params = j["params"];
  }
  for (const auto& [k, v] : j.items())
    if (!kCommonKeys.count(k)) cfg.params[k] = v;
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    throw UsageError("kind: expected one of distortion, optimal, merge, pfunction, sequential, ville, examples; got \"" +
                     cfg.kind + "\"");
  if (cfg.backend != "exact" && cfg.backend != "float") throw UsageError("backend: expected exact or float");
  if (cfg.format != "csv" && cfg.format != "json") throw UsageError("format: expected csv or json");
  if (cfg.n && *cfg.n == 0) throw UsageError("n: must be at least 1");
  if (cfg.out_dir.empty()) throw UsageError("out: must not be empty");
  const auto& allowed = param_keys().at(cfg.kind);
  for (const auto& [k, _] : cfg.params.items())
    if (!allowed.count(k)) throw UsageError(cfg.kind + ": unknown key \"" + k + "\"");
  const bool mc = cfg.kind == "sequential" || cfg.kind == "ville" ||
                  (cfg.kind == "distortion" && cfg.params.value("monte_carlo", false) == true);
  if (mc && !cfg.seed)
    throw UsageError(cfg.kind + ": Monte Carlo needs a seed (--seed, EVALID_SEED or \"seed\" in the config)");
}

std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + csv_field(t.columns[i]);
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + cell_text(row[i]);
    s += '\n';
  }
  return s;
}

Json to_json(const Table& t) {
  Json out = Json::array();
  for (const auto& row : t.rows) {
    Json o = Json::object();
    for (std::size_t i = 0; i < t.columns.size() && i < row.size(); ++i) o[t.columns[i]] = row[i];
    out.push_back(std::move(o));
  }
  return out;
}

RunResult execute(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.kind == "examples") {
    auto r = reproduce_examples(cfg.backend);
    r.report["seed"] = cfg.seed ? Json(*cfg.seed) : Json();
    return r;
  }
  Context ctx(cfg);
  Json results;
  if (cfg.kind == "distortion") results = detail::run_distortion(ctx);
  else if (cfg.kind == "optimal") results = detail::run_optimal(ctx);
  else if (cfg.kind == "merge") results = detail::run_merge(ctx);
  else if (cfg.kind == "pfunction") results = detail::run_pfunction(ctx);
  else if (cfg.kind == "sequential") results = detail::run_sequential(ctx);
  else results = detail::run_ville(ctx);

  RunResult r;
  r.tables = std::move(ctx.tables());
  Json names = Json::array();
  for (const auto& [name, _] : r.tables) names.push_back(name);
  r.report = Json{{"schema_version", kSchemaVersion},
                  {"kind", cfg.kind},
                  {"backend", cfg.backend},
                  {"seed", cfg.seed ? Json(*cfg.seed) : Json()},
                  {"n", cfg.n ? Json(*cfg.n) : Json()},
                  {"params", cfg.params},
                  {"fixtures", ctx.fixtures()},
                  {"results", results},
                  {"tables", names}};
  if (results.contains("verdict")) r.report["verdict"] = results["verdict"];
  return r;
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  RunResult r;
  try {
    r = execute(cfg);
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_file(dir / "report.json", r.report.dump(2) + "\n");
    out << (dir / "report.json").generic_string() << "\n";
    for (const auto& [name, t] : r.tables) {
      const fs::path p = dir / (name + (cfg.format == "csv" ? ".csv" : ".json"));
      write_file(p, cfg.format == "csv" ? to_csv(t) : to_json(t).dump(2) + "\n");
      out << p.generic_string() << "\n";
    }
  } catch (const UsageError& e) {
    err << error_json("usage", e.what()).dump() << "\n";
    return kUsage;
  } catch (const FixtureMissing& e) {
    Json j = error_json("fixture_missing", e.what());
    j["error"]["fixture"] = e.ref();
    err << j.dump() << "\n";
    return kFixtureMissing;
  } catch (const Json::exception& e) {
    err << error_json("validation", e.what()).dump() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << error_json("io", e.what()).dump() << "\n";
    return kValidation;
  } catch (const Error& e) {
    err << error_json("validation", e.what()).dump() << "\n";
    return kValidation;
  }
  if (r.exit_code == kMismatch) {
    Json j = error_json("mismatch", "golden values differ");
    j["error"]["checks"] = r.mismatches;
    err << j.dump() << "\n";
  }
  return r.exit_code;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Post-hoc hypothesis testing experiments"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path, out_dir, backend, format, seed_text;
  std::optional<std::uint64_t> n;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_text, "Monte Carlo seed (overrides EVALID_SEED and the config)");
  app.add_option("--n", n, "Monte Carlo sample size");
  app.add_option("--out", out_dir, "Output directory (default out)");
  app.add_option("--backend", backend, "exact or float")->check(CLI::IsMember({"exact", "float"}));
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  for (const auto& k : experiment_kinds()) app.add_subcommand(k, "Run the " + k + " experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what()).dump() << "\n";
    return kUsage;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path, std::ios::binary);
      if (!f) {
        Json j = error_json("fixture_missing", "config not found: " + config_path);
        j["error"]["fixture"] = config_path;
        err << j.dump() << "\n";
        return kFixtureMissing;
      }
      Json j;
      try {
        j = Json::parse(f);
      } catch (const Json::parse_error& e) {
        throw UsageError("config " + config_path + ": " + e.what());
      }
      const auto base = fs::path(config_path).parent_path();
      cfg = config_from_json(j, base.empty() ? "." : base.string());
    }
    const std::string kind = app.get_subcommands().front()->get_name();
    if (!cfg.kind.empty() && cfg.kind != kind)
      throw UsageError("config kind \"" + cfg.kind + "\" does not match subcommand \"" + kind + "\"");
    cfg.kind = kind;
    if (const char* env = std::getenv("EVALID_SEED"); env && *env) cfg.seed = u64_of(Json(env), "EVALID_SEED");
    if (!seed_text.empty()) cfg.seed = u64_of(Json(seed_text), "--seed");
    if (n) cfg.n = *n;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!backend.empty()) cfg.backend = backend;
    if (!format.empty()) cfg.format = format;
  } catch (const UsageError& e) {
    err << error_json("usage", e.what()).dump() << "\n";
    return kUsage;
  }
  return run(cfg, out, err);
}

}  // namespace posthoc::cli
