#include <cstdlib>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + PRESUP_CLI + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = presup::testing::read_file(out);
  r.err = presup::testing::read_file(err);
  return r;
}

std::string fixture_flags(const fs::path& out) {
  return "--out '" + out.string() + "' --set 'paths.corpus=" + PRESUP_TEST_DATA +
         "/fixture_corpus.tsv' --set 'extraction.test_sections=[\"6-7\"]'";
}

TEST(Cli, HelpAndBadUsage) {
  presup::testing::TempDir dir("cli");
  EXPECT_EQ(run_cli("--help", dir.path()).code, 0);
  EXPECT_EQ(run_cli("", dir.path()).code, 2);
  EXPECT_EQ(run_cli("frobnicate", dir.path()).code, 2);
  EXPECT_EQ(run_cli("eval --split x.jsonl", dir.path()).code, 2);
  EXPECT_EQ(run_cli("extract --seed notanumber", dir.path()).code, 2);
}

TEST(Cli, MissingCorpusExitsTwoAndNamesPath) {
  presup::testing::TempDir dir("cli");
  const CliRun r = run_cli("extract --out '" + (dir / "out").string() +
                            "' --set paths.corpus=/nonexistent/corpus.tsv",
                        dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("/nonexistent/corpus.tsv"), std::string::npos) << r.err;
}

TEST(Cli, UnknownOverrideExitsTwo) {
  presup::testing::TempDir dir("cli");
  const CliRun r = run_cli("extract --set train.bogus=1", dir.path());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.bogus"), std::string::npos);
}

TEST(Cli, MalformedCorpusIsRuntimeError) {
  presup::testing::TempDir dir("cli");
  {
    std::ofstream(dir / "bad.tsv") << "#doc d1 01\nonly\ttwo\n";
  }
  const CliRun r = run_cli("extract --out '" + (dir / "out").string() + "' --set 'paths.corpus=" +
                            (dir / "bad.tsv").string() + "'",
                        dir.path());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.tsv"), std::string::npos) << r.err;
}

TEST(Cli, ExtractTrainEvalCompare) {
  presup::testing::TempDir dir("cli");
  const fs::path out = dir / "out";
  const std::string flags = fixture_flags(out);
  const CliRun ex = run_cli("extract " + flags, dir.path());
  ASSERT_EQ(ex.code, 0) << ex.err;
  EXPECT_NE(ex.out.find("extracted 6 datasets"), std::string::npos);
  EXPECT_TRUE(presup::testing::golden_extraction_mismatches(out).empty());

  const std::string small =
      " --set model.embedding_dim=4 --set model.hidden=2 --set model.dense=3 --set model.pos_dim=2"
      " --set train.max_epochs=2";
  const CliRun tr = run_cli("train " + flags + small + " --set name=a", dir.path());
  ASSERT_EQ(tr.code, 0) << tr.err;
  ASSERT_TRUE(fs::exists(out / "checkpoints/a.json"));
  const CliRun tr2 = run_cli("train " + flags + small + " --set name=b --set model.variant=lstm", dir.path());
  ASSERT_EQ(tr2.code, 0) << tr2.err;

  const std::string test = (out / "datasets/all/test.jsonl").string();
  const CliRun ev = run_cli("eval " + flags + " --checkpoint '" + (out / "checkpoints/a.json").string() +
                             "' --split '" + test + "'",
                         dir.path());
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_TRUE(fs::exists(out / "reports/eval_a_all_test.json"));

  const CliRun cmp = run_cli("compare " + flags + " --a '" + (out / "checkpoints/a.json").string() +
                              "' --b '" + (out / "checkpoints/b.json").string() + "' --split '" +
                              test + "'",
                          dir.path());
  ASSERT_EQ(cmp.code, 0) << cmp.err;
  EXPECT_TRUE(fs::exists(out / "reports/compare_a_vs_b_all_test.json"));

  const CliRun missing = run_cli("eval " + flags + " --checkpoint '" + (out / "nope.json").string() +
                                  "' --split '" + test + "'",
                              dir.path());
  EXPECT_EQ(missing.code, 2);
}

TEST(Cli, ConfigFileAndSeedFlag) {
  presup::testing::TempDir dir("cli");
  {
    std::ofstream(dir / "run.json") << "{\"seed\": 3, \"extraction\": {\"test_sections\": [\"6-7\"]}}";
  }
  const fs::path a = dir / "a", b = dir / "b";
  const std::string corpus = std::string(" --set 'paths.corpus=") + PRESUP_TEST_DATA + "/fixture_corpus.tsv'";
  const std::string cfg = " --config '" + (dir / "run.json").string() + "'";
  ASSERT_EQ(run_cli("extract" + cfg + corpus + " --out '" + a.string() + "'", dir.path()).code, 0);
  ASSERT_EQ(run_cli("extract" + cfg + corpus + " --seed 3 --out '" + b.string() + "'", dir.path()).code, 0);
  EXPECT_EQ(presup::testing::read_file(a / "datasets/all/train.jsonl"),
            presup::testing::read_file(b / "datasets/all/train.jsonl"));
  EXPECT_EQ(run_cli("extract --config '" + (dir / "none.json").string() + "'", dir.path()).code, 2);
}

}  // namespace
