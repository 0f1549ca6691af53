#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lts/cli.hpp"

namespace {

using namespace lts;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(LTS_TEST_DIR) / "cli_scratch";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto path = scratch(name);
  std::ofstream(path) << text;
  return path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kOutlier5 = "x,y\n0,1\n1,3\n2,5\n3,7\n4,100\n";

Json run_json(cli::RunConfig c, int expect_code = 0) {
  const auto out = scratch(c.command + ".json");
  c.output = out.string();
  std::ostringstream err;
  EXPECT_EQ(cli::run(c, err), expect_code) << err.str();
  return Json::parse(read_file(out));
}

int run_code(const cli::RunConfig& c, Json* error = nullptr) {
  std::ostringstream err;
  const int code = cli::run(c, err);
  if (error && !err.str().empty()) *error = Json::parse(err.str());
  return code;
}

int shell(const std::string& args) {
  const std::string cmd = std::string(LTS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(LoadDataset, ResponseAndCarriers) {
  const auto path = write_file("three.csv", "x1,y,x2\n1,10,2\n2,20,3\n3,30,5\n4,40,7\n5,50,11\n6,60,13\n7,70,17\n");
  const auto d = load_dataset(path.string(), "y");
  EXPECT_EQ(d.p(), 3);
  EXPECT_EQ(d.n(), 7);
  EXPECT_EQ(d.y()(2), 30.0);
  EXPECT_EQ(d.w()(2, 0), 1.0);
  EXPECT_EQ(d.w()(2, 1), 3.0);
  EXPECT_EQ(d.w()(2, 2), 5.0);
}

TEST(LoadDataset, TextCellNamesRow) {
  std::istringstream in("x,y\n1,2\n2,abc\n3,4\n4,5\n5,6\n");
  try {
    parse_dataset(in, "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonNumericCell);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("'y'"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, TooFewRows) {
  std::istringstream in("a,b,c,y\n1,2,3,4\n2,3,4,5\n3,4,5,6\n4,5,6,8\n5,6,7,9\n");
  try {
    parse_dataset(in, "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewRows);
  }
}

TEST(LoadDataset, StructuralErrors) {
  std::istringstream ragged("x,y\n1,2\n3\n");
  EXPECT_THROW(parse_dataset(ragged, "y"), Error);
  std::istringstream missing("x,z\n1,2\n");
  EXPECT_THROW(parse_dataset(missing, "y"), Error);
  std::istringstream empty("");
  EXPECT_THROW(parse_dataset(empty, "y"), Error);
  EXPECT_THROW(load_dataset(scratch("does-not-exist.csv").string(), "y"), Error);
}

TEST(Run, FitOutlierDataset) {
  cli::RunConfig c;
  c.command = "fit";
  c.input = write_file("outlier5.csv", kOutlier5).string();
  c.alpha = 0.5;
  const Json j = run_json(c);
  EXPECT_EQ(j["version"], cli::kVersion);
  EXPECT_EQ(j["seed"], 1);
  EXPECT_EQ(j["config"]["alpha"], 0.5);
  EXPECT_NEAR(j["results"]["beta"][0].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(j["results"]["beta"][1].get<double>(), 2.0, 1e-12);
  EXPECT_NEAR(j["results"]["objective"].get<double>(), 0.0, 1e-24);
  EXPECT_TRUE(j.contains("timestamp"));
}

TEST(Run, EnumerateMatchesFit) {
  cli::RunConfig c;
  c.command = "enumerate";
  c.input = write_file("outlier5.csv", kOutlier5).string();
  c.alpha = 0.5;
  const Json j = run_json(c);
  EXPECT_NEAR(j["results"]["beta"][1].get<double>(), 2.0, 1e-12);
}

TEST(Run, Constants) {
  cli::RunConfig c;
  c.command = "constants";
  c.sigma = 1.0;
  const Json j = run_json(c);
  const auto k = trim_constants(0.75, 1.0);
  EXPECT_EQ(j["results"]["C"].get<double>(), k.C);
  EXPECT_EQ(j["results"]["C1"].get<double>(), k.C1);
  EXPECT_EQ(j["results"]["cov_factor"].get<double>(), k.cov_factor);
  EXPECT_NEAR(j["results"]["C"].get<double>(), 0.138182, 2e-5);
  EXPECT_NEAR(j["results"]["cov_factor"].get<double>(), 0.491314, 1e-4);
}

TEST(Run, SigmaRequired) {
  cli::RunConfig c;
  c.command = "constants";
  Json err;
  EXPECT_EQ(run_code(c, &err), cli::exit_code::kUsage);
  EXPECT_EQ(err["error"]["code"], "UsageError");
  EXPECT_EQ(err["error"]["exit_code"], 2);
}

TEST(Run, InfluenceCanonicalAndEmpirical) {
  cli::RunConfig c;
  c.command = "influence";
  c.sigma = 1.0;
  c.point = {1.0, 0.5};
  Json j = run_json(c);
  EXPECT_EQ(j["results"]["model"], "canonical");
  EXPECT_EQ(j["results"]["branch"], "inside");
  EXPECT_NEAR(j["results"]["influence"][0].get<double>(), 0.5 / 0.75, 1e-12);
  c.point = {1.0, 2.0};
  j = run_json(c);
  EXPECT_EQ(j["results"]["branch"], "outside");
  EXPECT_EQ(j["results"]["influence"][1].get<double>(), 0.0);

  cli::RunConfig e;
  e.command = "influence";
  e.input = write_file("outlier5.csv", kOutlier5).string();
  e.alpha = 0.5;
  e.point = {2.0, 5.0};
  j = run_json(e);
  EXPECT_EQ(j["results"]["model"], "empirical");
}

TEST(Run, CiNormal) {
  cli::RunConfig c;
  c.command = "ci-normal";
  c.input = write_file("outlier5.csv", kOutlier5).string();
  c.alpha = 0.5;
  c.sigma = 1.0;
  const Json j = run_json(c);
  EXPECT_EQ(j["results"]["mode"], "corrected");
  EXPECT_EQ(j["results"]["n"], 5);
  EXPECT_GT(j["results"]["radius"].get<double>(), 0.0);
}

TEST(Run, CiBootstrapCsvAndSummary) {
  cli::RunConfig c;
  c.command = "ci-bootstrap";
  c.input = (fs::path(LTS_SOURCE_DIR) / "data" / "contaminated60.csv").string();
  c.m = 40;
  c.n_starts = 20;
  c.directions = 200;
  c.format = "csv";
  const auto out = scratch("boot.csv");
  c.output = out.string();
  std::ostringstream err;
  ASSERT_EQ(cli::run(c, err), 0) << err.str();
  const std::string table = read_file(out);
  EXPECT_EQ(table.substr(0, table.find('\n')), "index,beta_0,beta_1,beta_2,depth,retained");
  const Json summary = Json::parse(read_file(out.string() + ".summary.json"));
  EXPECT_EQ(summary["results"]["retained"].size(), 38u);
  EXPECT_EQ(summary["results"]["n_directions"], 200);
}

TEST(Run, SimulateConsistencyCsv) {
  cli::RunConfig c;
  c.command = "simulate-consistency";
  c.n_grid = {50, 200};
  c.reps = 5;
  c.n_starts = 10;
  c.format = "csv";
  const auto out = scratch("cons.csv");
  c.output = out.string();
  ASSERT_EQ(run_code(c), 0);
  std::istringstream table(read_file(out));
  std::string line;
  int rows = -1;
  while (std::getline(table, line)) ++rows;
  EXPECT_EQ(rows, 10);
  const Json summary = Json::parse(read_file(out.string() + ".summary.json"));
  EXPECT_EQ(summary["results"]["median_error"].size(), 2u);
}

TEST(Run, ErrorCodes) {
  cli::RunConfig c;
  c.command = "fit";
  c.input = write_file("bad.csv", "x,y\n1,2\n2,oops\n3,4\n4,5\n5,6\n").string();
  EXPECT_EQ(run_code(c), cli::exit_code::kParse);

  c.input = write_file("flat.csv", "x,y\n1,1\n1,2\n1,3\n1,4\n1,5\n1,6\n").string();
  c.alpha = 0.5;
  EXPECT_EQ(run_code(c), cli::exit_code::kNumeric);

  c.command = "enumerate";
  std::string big = "x,y\n";
  for (int i = 0; i < 40; ++i) big += std::to_string(i) + "," + std::to_string(i * i % 7) + "\n";
  c.input = write_file("big.csv", big).string();
  EXPECT_EQ(run_code(c), cli::exit_code::kResource);

  c.alpha = 0.3;
  EXPECT_EQ(run_code(c), cli::exit_code::kUsage);
  c.alpha = 0.5;
  c.format = "xml";
  EXPECT_EQ(run_code(c), cli::exit_code::kUsage);
  c.format = "csv";
  c.command = "constants";
  c.sigma = 1.0;
  EXPECT_EQ(run_code(c), cli::exit_code::kUsage);
}

TEST(Run, RepeatIsIdenticalWithoutTimestamp) {
  cli::RunConfig c;
  c.command = "fit";
  c.input = (fs::path(LTS_SOURCE_DIR) / "data" / "contaminated60.csv").string();
  c.n_starts = 50;
  Json a = run_json(c);
  Json b = run_json(c);
  EXPECT_TRUE(a.contains("timestamp"));
  a.erase("timestamp");
  b.erase("timestamp");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Binary, ExitCodes) {
  const std::string data = (fs::path(LTS_SOURCE_DIR) / "data" / "outlier5.csv").string();
  EXPECT_EQ(shell("constants --sigma 1"), 0);
  EXPECT_EQ(shell("fit --input " + data + " --alpha 0.5"), 0);
  EXPECT_EQ(shell("no-such-command"), 2);
  EXPECT_EQ(shell("fit --input " + data + " --mode sideways"), 2);
  const auto bad = write_file("bad-binary.csv", "x,y\n1,2\n2,oops\n3,4\n4,5\n5,6\n");
  EXPECT_EQ(shell("fit --input " + bad.string()), 3);
  EXPECT_EQ(shell("--version"), 0);
}

}  // namespace
