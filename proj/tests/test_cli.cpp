#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"

using namespace rayen;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rayen_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run_cli(args, out_, err_);
  }

  void write_box() {
    ConstraintSet cs;
    cs.k = 2;
    cs.linear.A1.resize(4, 2);
    cs.linear.A1 << 1, 0, 0, 1, -1, 0, 0, -1;
    cs.linear.b1 = Vector::Ones(4);
    io::write_text(path("box.json"), io::dump(io::spec_to_json(cs)));
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Cli, CompileWritesPlanAndReport) {
  write_box();
  ASSERT_EQ(run({"compile", path("box.json"), "-o", path("box.plan.json"), "--report", path("rep.json")}), 0)
      << err_.str();
  const auto plan = io::load_plan(path("box.plan.json"));
  EXPECT_EQ(plan.n, 2);
  EXPECT_EQ(io::parse_json(io::read_text(path("rep.json")), "report")["n"], 2);
}

TEST_F(Cli, SampleCloudIsFeasible) {
  write_box();
  ASSERT_EQ(run({"compile", path("box.json"), "-o", path("box.plan.json")}), 0);
  ASSERT_EQ(run({"sample", path("box.plan.json"), "-n", "12000", "--half-width", "2.5", "-o", path("cloud.csv")}), 0)
      << err_.str();
  const Matrix Y = io::load_batch(path("cloud.csv"));
  ASSERT_EQ(Y.rows(), 12000);
  const auto cs = io::load_spec(path("box.json"));
  for (Index i = 0; i < Y.rows(); ++i) ASSERT_TRUE(is_member(cs, Y.row(i).transpose(), 1e-9).member);
}

TEST_F(Cli, VerifyExitCodes) {
  write_box();
  ASSERT_EQ(run({"compile", path("box.json"), "-o", path("box.plan.json")}), 0);
  EXPECT_EQ(run({"verify", path("box.plan.json"), path("box.json"), "-n", "500"}), 0) << err_.str();
  EXPECT_TRUE(io::parse_json(out_.str(), "report")["passed"].get<bool>());

  auto j = io::parse_json(io::read_text(path("box.plan.json")), "plan");
  j["D"]["data"][0] = 0.5;
  io::write_text(path("tampered.plan.json"), io::dump(j));
  EXPECT_EQ(run({"verify", path("tampered.plan.json"), path("box.json"), "-n", "500"}), cli::exit_verify);
  EXPECT_NE(err_.str().find("verification failed"), std::string::npos);
}

TEST_F(Cli, MapIsByteIdenticalAcrossRuns) {
  write_box();
  ASSERT_EQ(run({"compile", path("box.json"), "-o", path("box.plan.json")}), 0);
  CounterRng rng(1);
  Matrix V(500, 2);
  for (Index i = 0; i < V.rows(); ++i) V.row(i) = rng.uniform_vector(2, -3, 3).transpose();
  io::write_text(path("in.csv"), io::matrix_to_csv(V));
  io::write_text(path("in.bin"), io::matrix_to_binary(V));
  ASSERT_EQ(run({"map", path("box.plan.json"), path("in.csv"), "-o", path("a.csv"), "--kappas", path("k.csv")}), 0);
  ASSERT_EQ(run({"map", path("box.plan.json"), path("in.bin"), "-o", path("b.csv")}), 0);
  EXPECT_EQ(io::read_text(path("a.csv")), io::read_text(path("b.csv")));
  ASSERT_EQ(run({"map", path("box.plan.json"), path("in.csv"), "-o", path("c.bin"), "--format", "bin"}), 0);
  EXPECT_EQ(io::matrix_from_binary(io::read_text(path("c.bin"))), io::load_batch(path("a.csv")));
  const Matrix K = io::matrix_from_csv(io::read_text(path("k.csv")).substr(io::read_text(path("k.csv")).find('\n') + 1));
  EXPECT_EQ(K.rows(), 500);
  EXPECT_EQ(K.cols(), 5);
}

TEST_F(Cli, DataErrorsAreStageLabeled) {
  write_box();
  ASSERT_EQ(run({"compile", path("box.json"), "-o", path("box.plan.json")}), 0);
  io::write_text(path("bad.json"), "{\"k\": 2, \"linear\": {\"A1\": [[1, 0]]}}");
  EXPECT_EQ(run({"compile", path("bad.json"), "-o", path("x.json")}), cli::exit_data);
  EXPECT_NE(err_.str().find("[io]"), std::string::npos) << err_.str();

  io::write_text(path("wide.csv"), "1,2,3\n");
  EXPECT_EQ(run({"map", path("box.plan.json"), path("wide.csv")}), cli::exit_data);
  EXPECT_NE(err_.str().find("columns"), std::string::npos);

  ConstraintSet other = io::load_spec(path("box.json"));
  other.linear.b1[0] = 3;
  io::write_text(path("other.json"), io::dump(io::spec_to_json(other)));
  io::write_text(path("in.csv"), "0.1,0.2\n");
  EXPECT_EQ(run({"map", path("box.plan.json"), path("in.csv"), "--spec", path("other.json")}), cli::exit_data);
  EXPECT_NE(err_.str().find("[mapper]"), std::string::npos);

  ConstraintSet empty;
  empty.k = 1;
  empty.linear.A1 = Matrix::Ones(2, 1);
  empty.linear.A1(1, 0) = -1;
  empty.linear.b1 = Vector::Zero(2);
  empty.linear.b1[0] = -1;
  io::write_text(path("empty.json"), io::dump(io::spec_to_json(empty)));
  EXPECT_EQ(run({"compile", path("empty.json")}), cli::exit_data);
  EXPECT_NE(err_.str().find("empty Y_L"), std::string::npos) << err_.str();

  EXPECT_EQ(run({"verify", path("missing.plan.json"), path("box.json")}), cli::exit_data);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), cli::exit_usage);
  EXPECT_EQ(run({"frobnicate"}), cli::exit_usage);
  EXPECT_EQ(run({"map", "only-one-arg"}), cli::exit_usage);
  EXPECT_EQ(run({"map", "a", "b", "--format", "xml"}), cli::exit_usage);
  EXPECT_EQ(run({"--help"}), cli::exit_ok);
  EXPECT_NE(out_.str().find("compile"), std::string::npos);
}

TEST_F(Cli, ParametricCompileRejectsWithCondition) {
  ConstraintSet cs;
  cs.k = 2;
  cs.quadratics.push_back({2 * Matrix::Identity(2, 2), Vector::Zero(2), 0.0});
  io::write_text(path("q.json"), io::dump(io::spec_to_json(cs)));
  EXPECT_EQ(run({"compile", path("q.json"), "--parametric"}), cli::exit_data);
  EXPECT_NE(err_.str().find("r_i < 0"), std::string::npos) << err_.str();
}

TEST_F(Cli, EnvironmentOverridesTolerance) {
  write_box();
  ::setenv("RAYEN_MIN_MARGIN", "5", 1);
  const int code = run({"compile", path("box.json"), "-o", path("p.json")});
  ::unsetenv("RAYEN_MIN_MARGIN");
  EXPECT_EQ(code, cli::exit_data);  // the box cannot reach a normalized margin of 5
  EXPECT_EQ(run({"compile", path("box.json"), "-o", path("p.json")}), 0);
}

TEST_F(Cli, BenchSingleCaseWritesCsv) {
  ASSERT_EQ(run({"bench", "--kind", "linear", "-k", "8", "--batch", "50", "--warmup", "1", "--repeats", "2", "-o",
                 path("b.csv")}),
            0)
      << err_.str();
  const std::string csv = io::read_text(path("b.csv"));
  EXPECT_EQ(csv.rfind(bench_csv_header(), 0), 0u);
  EXPECT_NE(csv.find("\nlinear,8,8,32,"), std::string::npos) << csv;
  EXPECT_EQ(run({"bench", "--kind", "linear"}), cli::exit_usage);
}
