#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "sgl/generators.hpp"
#include "sgl/io/atomic_file.hpp"
#include "sgl/io/matrix_market.hpp"
#include "sgl/io/measurement_io.hpp"
#include "sgl/measurements.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sgl_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(SGL_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string read(const std::string& name) const { return sgl::io::read_file(dir_ / name); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, TwoNodeGenerateGivesHalfCurrents) {
  sgl::io::write_matrix_market(path("two.mtx"), sgl::WeightedGraph(2, std::vector<sgl::Edge>{{0, 1, 1.0}}));
  ASSERT_EQ(run("generate " + path("two.mtx") + " --m 1 --seed 7 --out " + path("gen")), 0);
  const Eigen::MatrixXd X = sgl::io::read_matrix(path("gen/X.bin"));
  const Eigen::MatrixXd Y = sgl::io::read_matrix(path("gen/Y.bin"));
  ASSERT_EQ(X.cols(), 1);
  EXPECT_LE((X - Y / 2.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST_F(Cli, GenerateIsByteReproducible) {
  ASSERT_EQ(run("make-grid --rows 6 --cols 6 --out " + path("g.mtx")), 0);
  ASSERT_EQ(run("generate " + path("g.mtx") + " --seed 3 --noise 0 --out " + path("a")), 0);
  ASSERT_EQ(run("generate " + path("g.mtx") + " --seed 3 --noise 0 --out " + path("b")), 0);
  EXPECT_EQ(read("a/X.bin"), read("b/X.bin"));
  EXPECT_EQ(sgl::io::read_matrix(path("a/X.bin")).cols(), 50);  // default --m
  ASSERT_EQ(run("generate " + path("g.mtx") + " --seed 3 --noise 0.1 --csv --out " + path("c")), 0);
  EXPECT_TRUE(fs::exists(path("c/X.csv")));
  const auto manifest = nlohmann::json::parse(read("c/manifest.json"));
  EXPECT_EQ(manifest["command"], "generate");
  EXPECT_EQ(manifest["params"]["noise"], 0.1);
  EXPECT_EQ(manifest["seeds"]["seed"], 3);
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(manifest.contains("duration_seconds"));
}

TEST_F(Cli, JlModeColumnCount) {
  sgl::io::write_matrix_market(path("r.mtx"), sgl::random_connected_graph(200, 400, 1));
  ASSERT_EQ(run("generate " + path("r.mtx") + " --jl-eps 0.5 --seed 1 --out " + path("jl")), 0);
  EXPECT_EQ(static_cast<std::size_t>(sgl::io::read_matrix(path("jl/X.bin")).cols()),
            static_cast<std::size_t>(std::ceil(24.0 * std::log(200.0) / 0.25)));
  EXPECT_FALSE(fs::exists(path("jl/Y.bin")));
  EXPECT_EQ(run("generate " + path("r.mtx") + " --jl-eps 0.5 --m 10 --out " + path("bad")), 3);
}

TEST_F(Cli, InputErrorsExitThree) {
  EXPECT_EQ(run("generate " + path("missing.mtx")), 3);
  sgl::io::write_matrix_market(path("split.mtx"), sgl::WeightedGraph(4, std::vector<sgl::Edge>{{0, 1, 1.0}, {2, 3, 1.0}}));
  EXPECT_EQ(run("generate " + path("split.mtx") + " --out " + path("o")), 3);
  EXPECT_EQ(run("learn"), 3);
  EXPECT_EQ(run("bogus"), 3);
  sgl::io::write_file_atomic(dir_ / "bad.mtx", "not a matrix\n");
  EXPECT_EQ(run("eval " + path("bad.mtx") + " " + path("bad.mtx")), 3);
}

TEST_F(Cli, LearnEvalPipeline) {
  ASSERT_EQ(run("make-grid --rows 8 --cols 8 --out " + path("g.mtx")), 0);
  ASSERT_EQ(run("generate " + path("g.mtx") + " --seed 1 --out " + path("gen")), 0);
  ASSERT_EQ(run("learn " + path("gen/X.bin") + " --y " + path("gen/Y.bin") + " --out " + path("lrn")), 0);
  const auto manifest = nlohmann::json::parse(read("lrn/manifest.json"));
  EXPECT_EQ(manifest["params"]["k"], 5);
  EXPECT_EQ(manifest["params"]["r"], 5);
  EXPECT_EQ(manifest["params"]["tol"], 1e-12);
  EXPECT_EQ(manifest["params"]["beta"], 1e-3);
  EXPECT_EQ(manifest["result"]["status"], "converged");

  // trace.csv: header plus one row per iteration, final s_max <= tol.
  const std::string trace = read("lrn/trace.csv");
  EXPECT_EQ(trace.rfind("iteration,s_max,edges,F\n", 0), 0u);
  const auto last_line_start = trace.rfind('\n', trace.size() - 2) + 1;
  const std::string last = trace.substr(last_line_start);
  const double s_max = std::stod(last.substr(last.find(',') + 1));
  EXPECT_LE(s_max, 1e-12);

  ASSERT_EQ(run("eval " + path("g.mtx") + " " + path("lrn/learned.mtx") + " --x " + path("gen/X.bin") +
                " --pairs 500 --spectrum-k 10 --out " + path("ev")),
            0);
  for (const char* f : {"spectra.csv", "resistance_scatter.csv", "layout_true.csv", "layout_learned.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(path(std::string("ev/") + f))) << f;
  const auto report = nlohmann::json::parse(read("ev/manifest.json"))["report"];
  EXPECT_GT(report["pearson_r"].get<double>(), 0.5);
  EXPECT_EQ(report["eigenvalue_ratios"].size(), 10u);
  EXPECT_TRUE(report.contains("distortion_max"));
}

TEST_F(Cli, EvalIdenticalAndScaled) {
  const sgl::WeightedGraph g = sgl::grid_graph(5, 5);
  sgl::io::write_matrix_market(path("g.mtx"), g);
  sgl::io::write_matrix_market(path("g2.mtx"), g.scaled(2.0));
  ASSERT_EQ(run("eval " + path("g.mtx") + " " + path("g.mtx") + " --out " + path("same")), 0);
  EXPECT_NEAR(nlohmann::json::parse(read("same/manifest.json"))["report"]["pearson_r"].get<double>(), 1.0, 1e-12);
  ASSERT_EQ(run("eval " + path("g.mtx") + " " + path("g2.mtx") + " --spectrum-k 6 --out " + path("twice")), 0);
  for (const auto& r : nlohmann::json::parse(read("twice/manifest.json"))["report"]["eigenvalue_ratios"])
    EXPECT_NEAR(r.get<double>(), 2.0, 1e-9);
  sgl::io::write_matrix_market(path("small.mtx"), sgl::grid_graph(4, 4));
  EXPECT_EQ(run("eval " + path("g.mtx") + " " + path("small.mtx") + " --out " + path("bad")), 3);
}

TEST_F(Cli, SubsampleAndExitCodes) {
  ASSERT_EQ(run("make-grid --rows 10 --cols 10 --out " + path("g.mtx")), 0);
  ASSERT_EQ(run("generate " + path("g.mtx") + " --seed 2 --out " + path("gen")), 0);
  ASSERT_EQ(run("learn " + path("gen/X.bin") + " --subsample 0.2 --seed 4 --out " + path("sub")), 0);
  EXPECT_EQ(sgl::io::read_matrix_market(path("sub/learned.mtx")).node_count(), 20u);
  EXPECT_TRUE(fs::exists(path("sub/kept_nodes.csv")));
  EXPECT_EQ(run("learn " + path("gen/X.bin") + " --y " + path("gen/Y.bin") + " --subsample 0.2 --out " + path("bad")), 3);
  EXPECT_EQ(run("learn " + path("gen/X.bin") + " --max-iterations 1 --out " + path("cap")), 2);
  EXPECT_EQ(run("learn " + path("gen/X.bin") + " --beta 0 --out " + path("bad2")), 3);
  EXPECT_EQ(run("learn " + path("gen/X.bin") + " --y " + path("gen/Y.bin") + " --k 0 --out " + path("bad3")), 3);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  ASSERT_EQ(run("make-grid --rows 7 --cols 7 --out " + path("g.mtx")), 0);
  ASSERT_EQ(run("generate " + path("g.mtx") + " --seed 5 --noise 0.05 --out " + path("gen")), 0);
  const std::string x = read("gen/X.bin");
  ASSERT_EQ(run("learn " + path("gen/X.bin") + " --y " + path("gen/Y.bin") + " --trace-objective --out " + path("lrn")), 0);
  const std::string graph = read("lrn/learned.mtx");
  const std::string trace = read("lrn/trace.csv");
  fs::copy_file(path("gen/manifest.json"), path("gen.json"));
  fs::copy_file(path("lrn/manifest.json"), path("lrn.json"));
  fs::remove_all(path("gen"));
  fs::remove_all(path("lrn"));
  ASSERT_EQ(run("replay " + path("gen.json")), 0);
  ASSERT_EQ(run("replay " + path("lrn.json")), 0);
  EXPECT_EQ(read("gen/X.bin"), x);
  EXPECT_EQ(read("lrn/learned.mtx"), graph);
  EXPECT_EQ(read("lrn/trace.csv"), trace);
}
