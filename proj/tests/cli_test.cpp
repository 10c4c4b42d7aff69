// Copyright 2026 The pamkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pam/io.hpp"

namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("pam_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the CLI with `args`, returning its exit status.
  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " " + PAM_CLI_PATH + " " + args + " > " + (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string log() const { return slurp(dir_ / "log.txt"); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Small dataset in dir_/data.
  void synth(const std::string& extra = "") const {
    ASSERT_EQ(run("--seed 5 --out " + (dir_ / "data").string() + " synth --clips 24 --export-spectrograms 2 " + extra), 0)
        << log();
  }

  fs::path dir_;
};

TEST_F(CliTest, SynthIsDeterministicAndStampsConfigHash) {
  synth();
  ASSERT_EQ(run("--seed 5 --out " + (dir_ / "again").string() + " synth --clips 24 --export-spectrograms 2"), 0);
  EXPECT_TRUE(slurp(dir_ / "data" / "train.pamds") == slurp(dir_ / "again" / "train.pamds"));
  EXPECT_TRUE(slurp(dir_ / "data" / "test.pamds") == slurp(dir_ / "again" / "test.pamds"));
  const std::string labels = slurp(dir_ / "data" / "labels_train.csv");
  EXPECT_EQ(labels.rfind("# config_hash=", 0), 0u);
  EXPECT_EQ(labels.substr(0, 31), slurp(dir_ / "data" / "synth.config.ini").substr(0, 31));
  EXPECT_TRUE(fs::exists(dir_ / "data" / "test_0001.spec"));

  const pam::io::ClipFile f = pam::io::parse_clips(pam::io::read_file(dir_ / "data" / "train.pamds"));
  EXPECT_EQ(f.clips.size(), 12u);
}

TEST_F(CliTest, RefusesToOverwriteWithoutForce) {
  synth();
  EXPECT_EQ(run("--seed 5 --out " + (dir_ / "data").string() + " synth --clips 24"), 2);
  EXPECT_NE(log().find("--force"), std::string::npos);
  EXPECT_EQ(run("--seed 5 --force --out " + (dir_ / "data").string() + " synth --clips 24"), 0);
}

TEST_F(CliTest, ConfigFileAndEnvironmentOverrides) {
  std::ofstream(dir_ / "run.ini") << "seed=11\n[synth]\nclips=8\nexport-spectrograms=0\n";
  ASSERT_EQ(run("--config " + (dir_ / "run.ini").string() + " --out " + (dir_ / "a").string() + " synth"), 0) << log();
  EXPECT_EQ(pam::io::parse_clips(pam::io::read_file(dir_ / "a" / "train.pamds")).clips.size(), 4u);
  EXPECT_NE(slurp(dir_ / "a" / "synth.config.ini").find("seed=11"), std::string::npos);

  ASSERT_EQ(run("--config " + (dir_ / "run.ini").string() + " --out " + (dir_ / "b").string() + " synth",
                "PAM_SEED=12"),
            0);
  EXPECT_TRUE(slurp(dir_ / "a" / "train.pamds") != slurp(dir_ / "b" / "train.pamds"));
  ASSERT_EQ(run("--config " + (dir_ / "run.ini").string() + " --seed 11 --out " + (dir_ / "c").string() + " synth",
                "PAM_SEED=12"),
            0);
  EXPECT_TRUE(slurp(dir_ / "a" / "train.pamds") == slurp(dir_ / "c" / "train.pamds"));
}

TEST_F(CliTest, CompressDecompressCompressIsAFixpoint) {
  synth();
  const std::string spec = (dir_ / "data" / "test_0000.spec").string();
  const std::string plan = " --method human --budget 329 --scale 4.0";
  ASSERT_EQ(run("--out " + (dir_ / "c1").string() + " compress --input " + spec + plan), 0) << log();
  ASSERT_EQ(run("--out " + (dir_ / "d1").string() + " decompress --input " + (dir_ / "c1" / "test_0000.pamc").string()),
            0)
      << log();
  ASSERT_EQ(run("--out " + (dir_ / "c2").string() + " compress --input " +
                (dir_ / "d1" / "test_0000.spec").string() + plan),
            0)
      << log();
  const std::string first = slurp(dir_ / "c1" / "test_0000.pamc");
  EXPECT_EQ(first.substr(0, 4), "PAMC");
  EXPECT_TRUE(first == slurp(dir_ / "c2" / "test_0000.pamc"));
}

TEST_F(CliTest, ExitCodesSeparateConfigFromRuntimeErrors) {
  synth();
  const std::string spec = (dir_ / "data" / "test_0000.spec").string();
  EXPECT_EQ(run("--out " + (dir_ / "x").string() + " compress --input " + spec + " --method uniform --budget 100"), 2);
  EXPECT_EQ(run("--out " + (dir_ / "x").string() + " compress --input " + spec + " --method bogus"), 2);
  EXPECT_EQ(run("--out " + (dir_ / "x").string() + " compress --input " + spec + " --method learned"), 2);
  EXPECT_EQ(run("nosuchcommand"), 2);
  EXPECT_EQ(run("--out " + (dir_ / "x").string() + " decompress --input " + (dir_ / "missing.pamc").string()), 3);
  std::ofstream(dir_ / "junk.pamc") << "PAMCjunk";
  EXPECT_EQ(run("--out " + (dir_ / "y").string() + " decompress --input " + (dir_ / "junk.pamc").string()), 3);
  EXPECT_NE(log().find("decode"), std::string::npos);
}

TEST_F(CliTest, EvalTableHasOneRowPerMethodAndBudget) {
  synth();
  const std::string data = (dir_ / "data").string();
  ASSERT_EQ(run("--out " + (dir_ / "ev").string() +
                " eval --data " + data +
                " --epochs 1 --batch 8 --seeds 1 --budgets 235,329 --methods uniform,human"),
            0)
      << log();
  std::istringstream table(slurp(dir_ / "ev" / "table.txt"));
  std::string line;
  int rows = 0;
  while (std::getline(table, line)) {
    if (line.rfind("uniform", 0) == 0 || line.rfind("human", 0) == 0) ++rows;
  }
  EXPECT_EQ(rows, 4);
  const std::string csv = slurp(dir_ / "ev" / "results.csv");
  EXPECT_NE(csv.find("method,budget,seed,accuracy,precision,recall,compression_ratio"), std::string::npos);
}

TEST_F(CliTest, FloorFlagAdmitsTheLowBudgetGrid) {
  synth();
  const std::string base = "--out " + (dir_ / "ev").string() + " eval --data " + (dir_ / "data").string() +
                           " --epochs 1 --batch 8 --seeds 1 --budgets 47 --methods uniform";
  EXPECT_EQ(run(base), 2);
  ASSERT_EQ(run(base + " --floor 1"), 0) << log();
  EXPECT_NE(slurp(dir_ / "ev" / "results.csv").find("uniform,47,"), std::string::npos);
  EXPECT_EQ(run("--force " + base + " --floor 0"), 2);
}

TEST_F(CliTest, TrainAllocAndLearnedCompressionChain) {
  synth();
  const std::string data = (dir_ / "data").string();
  ASSERT_EQ(run("--out " + (dir_ / "al").string() + " alloc --data " + data + " --epochs 1 --batch 8 --mu 1e-3"), 0)
      << log();
  const std::string lambda = (dir_ / "al" / "lambda.csv").string();
  EXPECT_NE(slurp(lambda).find("bits_at_329"), std::string::npos);
  ASSERT_EQ(run("--out " + (dir_ / "tr").string() + " train --data " + data +
                " --epochs 1 --batch 8 --method learned --budget 329 --lambda " + lambda),
            0)
      << log();
  EXPECT_TRUE(fs::exists(dir_ / "tr" / "detector.pamm"));
  ASSERT_EQ(run("--out " + (dir_ / "warm").string() + " alloc --data " + data + " --epochs 1 --batch 8 --warm-start " +
                (dir_ / "tr" / "detector.pamm").string()),
            0)
      << log();
  ASSERT_EQ(run("--out " + (dir_ / "pr").string() + " pr --data " + data + " --epochs 1 --batch 8"), 0) << log();
  EXPECT_EQ(slurp(dir_ / "pr" / "pr_svm.csv").find("threshold,precision,recall"), 31u);
  ASSERT_EQ(run("--out " + (dir_ / "sg").string() + " segment --data " + data + " --epochs 1 --batch 8"), 0) << log();
  EXPECT_NE(log().find("without frequency conv"), std::string::npos);
  EXPECT_EQ(run("--out " + (dir_ / "bad").string() + " alloc --data " + data + " --epochs 1 --warm-start " +
                (dir_ / "sg" / "segmenter.pamm").string()),
            2);
}

}  // namespace
