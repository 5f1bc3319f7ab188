#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lassosens/cli.hpp"
#include "lassosens/io.hpp"

using namespace lassosens;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("lassosens_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST(Csv, RoundTripIsBitExact) {
  CounterRng rng(1);
  Matrix m(4, 3);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 3; ++j) m(i, j) = rng.normal() * std::pow(10.0, rng.normal() * 5);
  std::stringstream ss;
  io::write_csv(ss, m);
  EXPECT_EQ(io::parse_csv_matrix(ss), m);
}

TEST(Csv, Errors) {
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(io::parse_csv_matrix(ragged), InputError);
  std::stringstream junk("1,abc\n");
  EXPECT_THROW(io::parse_csv_matrix(junk), InputError);
  std::stringstream empty("");
  EXPECT_THROW(io::parse_csv_matrix(empty), InputError);
  std::stringstream nan("nan,1\n");
  EXPECT_THROW(io::parse_csv_matrix(nan), InputError);
}

TEST(Json, NumbersAndInfinity) {
  EXPECT_EQ(io::number(std::numeric_limits<double>::infinity()), "+inf");
  EXPECT_TRUE(io::number(std::nan("")).is_null());
  EXPECT_EQ(io::number(std::optional<double>()).is_null(), true);
  EXPECT_EQ(io::number(0.1).get<double>(), 0.1);
}

TEST(Json, ConfigRoundTrip) {
  ExperimentConfig c;
  c.spec = {EnsembleKind::rademacher, 12, 30, false, 99};
  c.s = 2;
  c.gamma = 0.05;
  c.lambda_grid.count = 11;
  c.lambda_grid.center = 0.3;
  c.trial_seed = 5;
  const ExperimentConfig back = io::config_from_json(io::to_json(c));
  EXPECT_EQ(io::to_json(back), io::to_json(c));
  EXPECT_THROW(io::config_from_json(json{{"s", 1}}), InputError);
}

TEST(Cli, SolveIdentity) {
  TempDir dir;
  io::write_matrix(dir.file("A.csv"), Matrix::Identity(3, 3));
  Vector b(3);
  b << 2, -0.3, 0.5;
  io::write_vector(dir.file("b.csv"), b);
  const auto r = run_cli({"solve", "--A", dir.file("A.csv"), "--b", dir.file("b.csv"),
                          "--lambda", "0.5", "--out", dir.file("sol.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(slurp(dir.file("sol.json")));
  EXPECT_EQ(j["schema_version"], "1");
  EXPECT_NEAR(j["x"][0].get<double>(), 1.5, 1e-12);
  EXPECT_NEAR(j["x"][1].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(j["support"], json::array({0}));
}

TEST(Cli, AnalyzeAndDerivative) {
  TempDir dir;
  Matrix a(2, 3);
  a << 1, 0, 2, 0, 2, -2;
  io::write_matrix(dir.file("A.csv"), a);
  io::write_vector(dir.file("b.csv"), Vector::Ones(2));
  auto r = run_cli({"analyze", "--A", dir.file("A.csv"), "--b", dir.file("b.csv"), "--lambda", "1.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = json::parse(r.out);
  EXPECT_EQ(j["assumptions"]["strong"], true);
  EXPECT_EQ(j["mode"], "strong");
  EXPECT_NEAR(j["lipschitz_lambda"].get<double>(), 0.25, 1e-12);

  r = run_cli({"analyze", "--A", dir.file("A.csv"), "--b", dir.file("b.csv"), "--lambda", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  j = json::parse(r.out);
  EXPECT_EQ(j["assumptions"]["weak"], "holds");
  EXPECT_TRUE(j["lipschitz_lambda"].is_null());

  r = run_cli({"derivative", "--A", dir.file("A.csv"), "--b", dir.file("b.csv"), "--lambda", "1.5",
               "--alpha", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  j = json::parse(r.out);
  EXPECT_NEAR(j["w"][1].get<double>(), -0.25, 1e-10);
  EXPECT_EQ(j["K"], json::array({1}));
}

TEST(Cli, Bounds) {
  const auto r = run_cli({"bounds", "--s", "4", "--delta", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["L_sparse"].get<double>(), 8.0, 1e-12);
  EXPECT_NEAR(j["L_no_sparsity"].get<double>(), 144.0, 1e-12);
}

TEST(Cli, DemoCounterexamplePasses) {
  const auto r = run_cli({"demo-counterexample"});
  EXPECT_EQ(r.code, 0) << r.out;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["all_pass"], true);
}

TEST(Cli, RipAndFuchs) {
  auto r = run_cli({"rip", "--m", "30", "--n", "12", "--seed", "5", "--s", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["subsets_checked"], 220);
  r = run_cli({"fuchs", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["agree"], true);
}

TEST(Cli, SweepWritesArtifactsDeterministically) {
  TempDir dir;
  const json cfg = {{"spec", {{"kind", "gaussian"}, {"m", 30}, {"n", 60}, {"seed", 4}}},
                    {"s", 2},
                    {"gamma", 0.1},
                    {"lambda_grid", {{"count", 11}}},
                    {"trial_seed", 2},
                    {"rip_samples", 200}};
  write_text(dir.file("cfg.json"), cfg.dump());
  const std::vector<std::string> args = {"sweep", "--config", dir.file("cfg.json"), "--out-csv",
                                         dir.file("s.csv"), "--out-json", dir.file("s.json")};
  ASSERT_EQ(run_cli(args).code, 0);
  const std::string csv1 = slurp(dir.file("s.csv"));
  const std::string json1 = slurp(dir.file("s.json"));
  EXPECT_EQ(csv1.substr(0, csv1.find('\n')), "lambda,error,bound,ratio");
  EXPECT_EQ(std::count(csv1.begin(), csv1.end(), '\n'), 12);
  ASSERT_EQ(run_cli(args).code, 0);
  EXPECT_EQ(slurp(dir.file("s.csv")), csv1);
  EXPECT_EQ(slurp(dir.file("s.json")), json1);
  EXPECT_EQ(json::parse(json1)["config"]["spec"]["seed"], 4);
}

TEST(Cli, InvocationErrorsExitTwo) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"nonsense"}).code, 2);
  EXPECT_EQ(run_cli({"solve", "--A", "/nonexistent/A.csv", "--b", "/nonexistent/b.csv",
                     "--lambda", "1"}).code, 2);
  EXPECT_EQ(run_cli({"bounds", "--s", "abc", "--delta", "0.5"}).code, 2);
  EXPECT_EQ(run_cli({"rip", "--s", "2"}).code, 2);
}

TEST(Cli, LibraryErrorsExitOneWithJson) {
  TempDir dir;
  io::write_matrix(dir.file("A.csv"), Matrix::Identity(2, 2));
  io::write_vector(dir.file("b.csv"), Vector::Ones(2));
  const auto r = run_cli({"solve", "--A", dir.file("A.csv"), "--b", dir.file("b.csv"),
                          "--lambda", "0"});
  EXPECT_EQ(r.code, 1);
  const json j = json::parse(r.err);
  EXPECT_EQ(j["error"], "input_error");
  EXPECT_FALSE(j["message"].get<std::string>().empty());

  const auto b = run_cli({"bounds", "--s", "1", "--delta", "1.5"});
  EXPECT_EQ(b.code, 1);
  EXPECT_EQ(json::parse(b.err)["error"], "input_error");
}
