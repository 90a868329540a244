#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ddl/matrix_io.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("ddl_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  RunResult run(const std::string& args) const {
    const std::string out_file = path("_stdout.txt");
    const std::string err_file = path("_stderr.txt");
    const std::string cmd = std::string(LRSDL_CLI_PATH) + " " + args + " > " +
                            out_file + " 2> " + err_file;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
  }

  // Generates a small labeled problem into the test directory.
  void make_synth(const std::string& sub, unsigned seed = 3) const {
    const RunResult r = run(
        "synth --classes 3 --dim 30 --elems-per-class 2 --shared-elems 1 "
        "--train-per-class 6 --test-per-class 3 --seed " +
        std::to_string(seed) + " --out " + path(sub));
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }

  std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(run("--help").exit_code, 0);
  EXPECT_EQ(run("train --help").exit_code, 0);
}

TEST_F(CliTest, NoSubcommandIsArgumentError) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("frobnicate").exit_code, 2);
}

TEST_F(CliTest, ComplexityPrintsPinnedCounts) {
  const RunResult r = run("complexity");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("Table I"), std::string::npos);
  EXPECT_NE(r.out.find("Table II"), std::string::npos);
  EXPECT_NE(r.out.find("6.25e+12"), std::string::npos);
  EXPECT_NE(r.out.find("2.525e+10"), std::string::npos);
  EXPECT_NE(r.out.find("3.75e+10"), std::string::npos);
  EXPECT_NE(r.out.find("1.30505e+11"), std::string::npos);
  EXPECT_EQ(run("complexity --C 0").exit_code, 2);
}

TEST_F(CliTest, FullPipelineTrainsAndClassifies) {
  make_synth("data");
  RunResult r = run("train --method lrsdl --data " + path("data/train.txt") +
                    " --labels " + path("data/train_labels.txt") +
                    " --k 2 --k0 1 --iters 4 --out " + path("model") +
                    " --history " + path("hist.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("final_cost="), std::string::npos);

  // History carries the pre-loop record plus one row per completed
  // iteration, so rows = reported iteration count + 1.
  const auto pos = r.out.find("iterations=");
  ASSERT_NE(pos, std::string::npos);
  const int iters_done = std::stoi(r.out.substr(pos + 11));
  EXPECT_GE(iters_done, 1);
  EXPECT_LE(iters_done, 4);
  std::ifstream hist(path("hist.csv"));
  std::string line;
  int lines = 0;
  ASSERT_TRUE(std::getline(hist, line));
  EXPECT_EQ(line, "iter,cost,elapsed_sec");
  while (std::getline(hist, line))
    if (!line.empty()) ++lines;
  EXPECT_EQ(lines, iters_done + 1);

  r = run("classify --model " + path("model") + " --data " +
          path("data/test.txt") + " --labels " + path("data/test_labels.txt") +
          " --report " + path("report.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy="), std::string::npos);

  nlohmann::json report;
  std::ifstream(path("report.json")) >> report;
  ASSERT_TRUE(report.contains("accuracy"));
  ASSERT_TRUE(report.contains("per_sample"));
  ASSERT_EQ(report["per_sample"].size(), 9u);
  const auto& first = report["per_sample"][0];
  EXPECT_TRUE(first.contains("true"));
  EXPECT_TRUE(first.contains("predicted"));
  EXPECT_TRUE(first.contains("scores"));
  EXPECT_EQ(first["scores"].size(), 3u);
  EXPECT_GE(report["accuracy"].get<double>(), 0.0);
  EXPECT_LE(report["accuracy"].get<double>(), 1.0);

  // Without labels the report has predictions but no accuracy field.
  r = run("classify --model " + path("model") + " --data " +
          path("data/test.txt") + " --report " + path("report2.json"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  nlohmann::json report2;
  std::ifstream(path("report2.json")) >> report2;
  EXPECT_FALSE(report2.contains("accuracy"));
  EXPECT_FALSE(report2["per_sample"][0].contains("true"));
}

TEST_F(CliTest, EveryMethodTrainsOnTheToyProblem) {
  make_synth("data");
  for (const std::string method : {"fddl", "dlsi", "copar"}) {
    const std::string extra = method == "copar" ? " --k0 1" : "";
    const RunResult r = run("train --method " + method + " --data " +
                            path("data/train.txt") + " --labels " +
                            path("data/train_labels.txt") + " --k 2 --iters 3" +
                            extra + " --out " + path("model_" + method));
    ASSERT_EQ(r.exit_code, 0) << method << ": " << r.err;

    const RunResult c = run("classify --model " + path("model_" + method) +
                            " --data " + path("data/test.txt"));
    ASSERT_EQ(c.exit_code, 0) << method << ": " << c.err;
    EXPECT_NE(c.out.find(method), std::string::npos);
  }
}

TEST_F(CliTest, MissingDataIsExitTwo) {
  const RunResult r = run("train --method lrsdl --labels x.txt --out m");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, MalformedMatrixIsExitThree) {
  std::ofstream(path("bad.txt")) << "2 2\n1.0 2.0\nnot a number\n";
  std::ofstream(path("labels.txt")) << "1\n2\n";
  const RunResult r = run("train --data " + path("bad.txt") + " --labels " +
                          path("labels.txt") + " --out " + path("m"));
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(CliTest, DimensionMismatchAtClassifyIsExitThree) {
  make_synth("data");
  RunResult r = run("train --method fddl --data " + path("data/train.txt") +
                    " --labels " + path("data/train_labels.txt") +
                    " --k 2 --iters 2 --out " + path("model"));
  ASSERT_EQ(r.exit_code, 0) << r.err;

  ddl::write_matrix(path("wrong.txt"), ddl::Matrix::Zero(31, 2));
  r = run("classify --model " + path("model") + " --data " + path("wrong.txt"));
  EXPECT_EQ(r.exit_code, 3);

  // Label count disagreeing with the sample count is also a data error.
  std::ofstream(path("short_labels.txt")) << "1\n";
  r = run("classify --model " + path("model") + " --data " +
          path("data/test.txt") + " --labels " + path("short_labels.txt"));
  EXPECT_EQ(r.exit_code, 3);
}

TEST_F(CliTest, SharedAtomPolicyPerMethod) {
  make_synth("data");
  const std::string base = " --data " + path("data/train.txt") + " --labels " +
                           path("data/train_labels.txt") + " --k 2 --iters 2";

  RunResult r = run("train --method fddl --k0 3" + base + " --out " + path("a"));
  EXPECT_EQ(r.exit_code, 2);
  r = run("train --method copar --k0 0" + base + " --out " + path("b"));
  EXPECT_EQ(r.exit_code, 2);

  r = run("train --method lrsdl --k0 0" + base + " --out " + path("c"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.err.find("identical to fddl"), std::string::npos);
}

TEST_F(CliTest, ConfigFileMergesUnderExplicitFlags) {
  make_synth("data");
  std::ofstream(path("config.json"))
      << R"({"lambda1": 0.25, "iters": 2, "mystery_knob": 7})";
  const std::string stem = "train --method fddl --data " +
                           path("data/train.txt") + " --labels " +
                           path("data/train_labels.txt") + " --k 2 --config ";
  const std::string base = stem + path("config.json");

  // Config value applies when the flag is absent.
  RunResult r = run(base + " --out " + path("m1"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.err.find("mystery_knob"), std::string::npos);
  nlohmann::json manifest;
  std::ifstream(path("m1/manifest.json")) >> manifest;
  EXPECT_DOUBLE_EQ(manifest["params"]["lambda1"].get<double>(), 0.25);
  EXPECT_EQ(manifest["params"]["max_outer_iters"].get<int>(), 2);

  // An explicit flag wins over the config value.
  r = run(base + " --lambda1 0.5 --out " + path("m2"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::ifstream(path("m2/manifest.json")) >> manifest;
  EXPECT_DOUBLE_EQ(manifest["params"]["lambda1"].get<double>(), 0.5);

  std::ofstream(path("bad_config.json")) << "{ nope";
  r = run(stem + path("bad_config.json") + " --out " + path("m3"));
  EXPECT_EQ(r.exit_code, 3);
}

TEST_F(CliTest, BenchWritesCsvAndZeroItersGivesHeaderOnly) {
  RunResult r = run("bench --compare dlsi-d --C 2 --d 20 --n 5 --k 2 --iters 2"
                    " --out " + path("bench.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("speedup="), std::string::npos);
  std::ifstream csv(path("bench.csv"));
  std::string line;
  ASSERT_TRUE(std::getline(csv, line));
  EXPECT_EQ(line, "variant,iter,cost,elapsed_sec");
  int original_rows = 0, efficient_rows = 0;
  while (std::getline(csv, line)) {
    if (line.rfind("original,", 0) == 0) ++original_rows;
    if (line.rfind("efficient,", 0) == 0) ++efficient_rows;
  }
  EXPECT_EQ(original_rows, 2);
  EXPECT_EQ(efficient_rows, 2);

  r = run("bench --compare dlsi-d --C 2 --d 20 --n 5 --k 2 --iters 0 --out " +
          path("bench0.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(slurp(path("bench0.csv")), "variant,iter,cost,elapsed_sec\n");

  EXPECT_EQ(run("bench --compare nonsense --out " + path("x.csv")).exit_code, 2);
}

TEST_F(CliTest, SynthIsDeterministicPerSeed) {
  make_synth("a", 11);
  make_synth("b", 11);
  make_synth("c", 12);
  EXPECT_EQ(slurp(path("a/train.txt")), slurp(path("b/train.txt")));
  EXPECT_EQ(slurp(path("a/test.txt")), slurp(path("b/test.txt")));
  EXPECT_NE(slurp(path("a/train.txt")), slurp(path("c/train.txt")));

  nlohmann::json meta;
  std::ifstream(path("a/meta.json")) >> meta;
  EXPECT_EQ(meta["classes"].get<int>(), 3);
  EXPECT_EQ(meta["seed"].get<int>(), 11);
  EXPECT_TRUE(std::filesystem::exists(path("a/elements.txt")));

  EXPECT_EQ(run("synth --classes 0 --out " + path("z")).exit_code, 2);
}

TEST_F(CliTest, ThreadedDlsiTrainingMatchesSerial) {
  make_synth("data");
  const std::string base = " --method dlsi --data " + path("data/train.txt") +
                           " --labels " + path("data/train_labels.txt") +
                           " --k 2 --iters 3";
  RunResult r = run("train" + base + " --threads 1 --out " + path("t1"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  r = run("train" + base + " --threads 2 --out " + path("t2"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(slurp(path("t1/D.txt")), slurp(path("t2/D.txt")));

  EXPECT_EQ(run("train" + base + " --threads 0 --out " + path("t0")).exit_code, 2);
}
