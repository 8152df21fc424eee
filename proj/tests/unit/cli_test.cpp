#include "posthoc/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace posthoc;
using namespace posthoc::cli;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "posthoc");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = posthoc::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Json report(const fs::path& dir) { return Json::parse(slurp(dir / "report.json")); }

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("posthoc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("EVALID_SEED");
  }
  void TearDown() override {
    fs::remove_all(dir_);
    unsetenv("EVALID_SEED");
  }
  std::string out(const char* sub) const { return (dir_ / sub).string(); }
  std::string write_config(const Json& j) const {
    const auto p = dir_ / "config.json";
    std::ofstream(p) << j.dump();
    return p.string();
  }
  fs::path dir_;
};

std::string table_cell(const Table& t, std::size_t row, const std::string& col) {
  for (std::size_t c = 0; c < t.columns.size(); ++c)
    if (t.columns[c] == col) return t.rows.at(row).at(c).is_string() ? t.rows[row][c].get<std::string>() : t.rows[row][c].dump();
  return "";
}

}  // namespace

TEST(Examples, BothBackendsMatchEveryGoldenValue) {
  for (const char* backend : {"exact", "float"}) {
    const auto r = reproduce_examples(backend);
    EXPECT_EQ(r.exit_code, kOk) << backend;
    EXPECT_TRUE(r.mismatches.empty()) << backend << ": " << Json(r.mismatches).dump();
    EXPECT_EQ(r.report["verdict"], "PASS");
    ASSERT_EQ(r.tables.at("examples").rows.size(), 8u);
    EXPECT_GT(r.tables.at("checks").rows.size(), 40u);
  }
  const auto exact = reproduce_examples("exact");
  const auto& ex = exact.tables.at("examples");
  EXPECT_EQ(table_cell(ex, 0, "expected_distortion"), "9/5");
  EXPECT_EQ(table_cell(ex, 0, "max_distortion"), "100");
}

TEST_F(CliTest, ExamplesWritesReportAndTables) {
  const auto r = invoke({"examples", "--out", out("a")});
  EXPECT_EQ(r.code, kOk) << r.err;
  const auto rep = report(out("a"));
  EXPECT_EQ(rep["schema_version"], "posthoc-report/1");
  EXPECT_EQ(rep["verdict"], "PASS");
  EXPECT_TRUE(fs::exists(dir_ / "a" / "checks.csv"));
  const auto csv = slurp(dir_ / "a" / "examples.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "example_id,expected_distortion,max_distortion,exact");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST_F(CliTest, OptimalOnTheGaussianPair) {
  const auto cfg = write_config(Json{{"kind", "optimal"}, {"pair", "preset:gaussian"}, {"backend", "float"}});
  const auto r = invoke({"optimal", "--config", cfg, "--out", out("g")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto g = report(out("g"))["results"]["gaussian"];
  EXPECT_NEAR(g["classical_critical_lr"].get<double>(), 3.137, 0.01);
  EXPECT_EQ(g["posthoc_threshold"].get<double>(), 20.0);
  EXPECT_LT(g["posthoc_power"].get<double>(), g["classical_power"].get<double>());
}

TEST_F(CliTest, SequentialPassesOnTheMartingale) {
  // Rules with heavy-tailed M_tau (fixed horizon, falling) are left out: their
  // sample SE understates the spread, so a 3-SE band misses often.
  const auto cfg = write_config(Json{{"kind", "sequential"}, {"rules", {"preset:hitting2", "preset:immediate"}}});
  const auto r = invoke({"sequential", "--config", cfg, "--seed", "7", "--out", out("s")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto rep = report(out("s"));
  EXPECT_EQ(rep["verdict"], "PASS");
  EXPECT_EQ(rep["seed"], 7);
  EXPECT_TRUE(fs::exists(dir_ / "s" / "ville.csv"));
}

TEST_F(CliTest, OutputsAreByteIdentical) {
  const std::vector<std::vector<std::string>> runs{
      {"distortion", "--seed", "3", "--n", "50000", "--backend", "float"},
      {"sequential", "--seed", "3", "--n", "5000"},
      {"merge"},
      {"pfunction"}};
  for (const auto& args : runs) {
    auto a = args, b = args;
    a.insert(a.end(), {"--out", out("one")});
    b.insert(b.end(), {"--out", out("two")});
    ASSERT_EQ(invoke(a).code, kOk) << args[0];
    ASSERT_EQ(invoke(b).code, kOk) << args[0];
    for (const auto& entry : fs::directory_iterator(dir_ / "one"))
      EXPECT_EQ(slurp(entry.path()), slurp(dir_ / "two" / entry.path().filename())) << entry.path();
    fs::remove_all(dir_ / "one");
    fs::remove_all(dir_ / "two");
  }
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(invoke({}).code, kUsage);
  EXPECT_EQ(invoke({"bogus"}).code, kUsage);
  EXPECT_EQ(invoke({"sequential", "--out", out("x")}).code, kUsage);
  EXPECT_EQ(invoke({"merge", "--backend", "quad"}).code, kUsage);
  EXPECT_EQ(invoke({"merge", "--config", out("missing.json")}).code, kFixtureMissing);
  EXPECT_EQ(invoke({"merge", "--config", write_config(Json{{"kind", "merge"}, {"colour", "red"}})}).code, kUsage);
  EXPECT_EQ(invoke({"merge", "--config", write_config(Json{{"kind", "optimal"}})}).code, kUsage);
  const auto missing =
      invoke({"merge", "--config", write_config(Json{{"kind", "merge"}, {"family", "preset:nothing"}}), "--out", out("m")});
  EXPECT_EQ(missing.code, kFixtureMissing);
  EXPECT_EQ(Json::parse(missing.err)["error"]["code"], "fixture_missing");
  const auto wrong =
      invoke({"optimal", "--config", write_config(Json{{"kind", "optimal"}, {"pair", "preset:exact"}}), "--out", out("w")});
  EXPECT_EQ(wrong.code, kValidation);
  EXPECT_EQ(Json::parse(wrong.err)["error"]["code"], "validation");
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, SeedPrecedence) {
  const auto cfg = write_config(Json{{"kind", "ville"}, {"seed", 1}, {"n", 1000}});
  ASSERT_EQ(invoke({"ville", "--config", cfg, "--out", out("c")}).code, kOk);
  EXPECT_EQ(report(out("c"))["seed"], 1);
  setenv("EVALID_SEED", "2", 1);
  ASSERT_EQ(invoke({"ville", "--config", cfg, "--out", out("e")}).code, kOk);
  EXPECT_EQ(report(out("e"))["seed"], 2);
  ASSERT_EQ(invoke({"ville", "--config", cfg, "--seed", "3", "--out", out("f")}).code, kOk);
  EXPECT_EQ(report(out("f"))["seed"], 3);
  setenv("EVALID_SEED", "x", 1);
  EXPECT_EQ(invoke({"ville", "--config", cfg, "--out", out("g")}).code, kUsage);
}

TEST_F(CliTest, JsonFormat) {
  ASSERT_EQ(invoke({"merge", "--format", "json", "--out", out("j")}).code, kOk);
  const auto rows = Json::parse(slurp(dir_ / "j" / "merged.json"));
  ASSERT_TRUE(rows.is_array());
  ASSERT_FALSE(rows.empty());
  EXPECT_TRUE(rows[0].is_object());
}

TEST(Tables, CsvRendering) {
  Table t{{"a", "b"}, {{Json("x,y"), Json()}, {Json(1), Json(true)}}};
  EXPECT_EQ(to_csv(t), "a,b\n\"x,y\",\n1,true\n");
  EXPECT_EQ(to_json(t)[1]["a"], 1);
}

TEST(Config, SplitsCommonKeysAndParams) {
  const auto cfg = config_from_json(Json{{"kind", "distortion"}, {"seed", 5}, {"law", "preset:exact"}});
  EXPECT_EQ(cfg.kind, "distortion");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.params["law"], "preset:exact");
  ExperimentConfig bad = cfg;
  bad.backend = "quad";
  EXPECT_THROW(validate(bad), UsageError);
  bad = cfg;
  bad.n = 0;
  EXPECT_THROW(validate(bad), UsageError);
}
