#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "l2c/evaluation.hpp"
#include "support.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = l2c::cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(L2C_BIN) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST(Cli, SynthThenTransformCountLaw) {
  support::TempDir dir;
  ASSERT_EQ(run({"synth", "--patients", "10", "--visits", "4", "--seed", "1", "--out", dir.file("c.csv")}).code, 0);
  const auto r = run({"transform", "--task", "ADAS", "--input", dir.file("c.csv"), "--out", dir.file("adas_train.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(support::data_lines(dir.file("adas_train.csv")), 60u);
  const auto manifest = nlohmann::json::parse(support::slurp(dir.file("adas_train.csv.schema.json")));
  EXPECT_EQ(manifest["task"], "ADAS");
  EXPECT_EQ(manifest["rows"], 60);
}

TEST(Cli, TransformAllTasksDefaultNames) {
  support::TempDir dir;
  run({"synth", "--patients", "20", "--out", dir.file("c.csv")});
  const auto r = run({"transform", "--input", dir.file("c.csv"), "--out-dir", dir.file("t")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"dx", "adas", "ventricles"}) {
    EXPECT_GT(support::data_lines(dir.file(std::string("t/") + name + "_train.csv")), 0u);
    EXPECT_TRUE(std::filesystem::exists(dir.file(std::string("t/") + name + "_test.csv")));
  }
}

TEST(Cli, PipelineIsDeterministic) {
  support::TempDir a, b;
  for (auto* dir : {&a, &b}) {
    ASSERT_EQ(run({"synth", "--patients", "40", "--seed", "9", "--out", dir->file("c.csv")}).code, 0);
    ASSERT_EQ(run({"--jobs", "3", "transform", "--input", dir->file("c.csv"), "--out-dir", dir->path().string()}).code, 0);
    ASSERT_EQ(run({"split", "--input", dir->file("dx_train.csv"), "--task", "DX", "--seed", "4", "--out",
                   dir->file("folds.csv")}).code, 0);
    const auto r = run({"fit-eval", "--task", "DX", "--mode", "cv", "--cohort", dir->file("c.csv"), "--train",
                        dir->file("dx_train.csv"), "--folds", dir->file("folds.csv"), "--predictor", "knn",
                        "--seeds", "1,2", "--out-dir", dir->file("r")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"c.csv", "dx_train.csv", "dx_test.csv", "folds.csv", "r/knn_report.json",
                        "r/knn_dx_seed1.csv"}) {
    EXPECT_EQ(support::slurp(a.file(f)), support::slurp(b.file(f))) << f;
  }
}

TEST(Cli, CompareFiveSeeds) {
  support::TempDir dir;
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  l2c::write_reports(dir.file("a.json"), "tabpfn",
                     {l2c::make_report(l2c::Task::Ventricles, l2c::Metric::MAE, "tabpfn", seeds, {1, 2, 3, 4, 5})});
  l2c::write_reports(dir.file("b.json"), "frog",
                     {l2c::make_report(l2c::Task::Ventricles, l2c::Metric::MAE, "frog", seeds, {2, 4, 6, 8, 10})});
  const auto r = run({"compare", "--a", dir.file("a.json"), "--b", dir.file("b.json"), "--out", dir.file("c.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto back = l2c::read_reports(dir.file("c.json"));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].comparison->p_value, 0.03125);
  EXPECT_TRUE(back[0].comparison->significant);
  EXPECT_NE(r.out.find("0.0312"), std::string::npos);
}

TEST(Cli, ForecastGrid) {
  support::TempDir dir;
  run({"synth", "--patients", "15", "--d2-fraction", "1", "--out", dir.file("c.csv")});
  const auto r = run({"forecast", "--cohort", dir.file("c.csv"), "--task", "DX", "--predictor", "carry-forward",
                      "--horizons", "6:24:6", "--out", dir.file("f.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(support::data_lines(dir.file("f.csv")), 15u * 4u);
  EXPECT_EQ(support::slurp(dir.file("f.csv")).substr(0, 40), "patient_id,horizon_month,p_CN,p_MCI,p_AD");
}

TEST(Cli, ConfigFileWithFlagOverride) {
  support::TempDir dir;
  {
    std::ofstream cfg(dir.file("run.toml"));
    cfg << "[synth]\npatients = 7\nvisits = 3\nout = \"" << dir.file("c.csv") << "\"\n";
  }
  ASSERT_EQ(run({"--config", dir.file("run.toml"), "synth"}).code, 0);
  ASSERT_EQ(run({"--config", dir.file("run.toml"), "synth", "--patients", "5", "--out", dir.file("d.csv")}).code, 0);
  EXPECT_EQ(support::data_lines(dir.file("c.csv")), 21u);
  EXPECT_EQ(support::data_lines(dir.file("d.csv")), 15u);
}

TEST(Cli, ExitCodes) {
  support::TempDir dir;
  EXPECT_EQ(run({"frobnicate"}).code, 64);
  EXPECT_EQ(run({"synth", "--bogus"}).code, 64);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"transform", "--input", dir.file("missing.csv")}).code, 66);

  { std::ofstream(dir.file("bad.csv")) << "RID,month_bl,DX\n1,0,NL\n1,6\n"; }
  EXPECT_EQ(run({"transform", "--input", dir.file("bad.csv"), "--out-dir", dir.file("o")}).code, 2);
  { std::ofstream(dir.file("dup.csv")) << "RID,month_bl,DX,ADAS13\n1,0,NL,1\n1,0,NL,2\n"; }
  EXPECT_EQ(run({"transform", "--strict", "--input", dir.file("dup.csv"), "--out-dir", dir.file("o")}).code, 3);
  { std::ofstream(dir.file("label.csv")) << "RID,month_bl,DX,ADAS13\n1,0,Unsure,1\n"; }
  EXPECT_EQ(run({"transform", "--input", dir.file("label.csv"), "--out-dir", dir.file("o")}).code, 3);

  // one diagnosis class only: BCA/MAUC undefined
  { std::ofstream(dir.file("flat.csv")) << "RID,month_bl,DX,ADAS13,D2\n1,0,NL,1,1\n1,6,NL,2,1\n2,0,NL,1,1\n2,6,NL,3,1\n"; }
  EXPECT_EQ(run({"fit-eval", "--task", "DX", "--cohort", dir.file("flat.csv"), "--predictor", "constant-median",
                 "--out-dir", dir.file("o")}).code, 5);

  run({"synth", "--patients", "60", "--d2-fraction", "1", "--out", dir.file("c.csv")});
  const std::string bridge = "fit-eval --task DX --cohort " + dir.file("c.csv") +
                             " --predictor bridge --out-dir " + dir.file("o") + " --host ";
  EXPECT_EQ(run_binary(bridge + "'" + ECHO_HOST_PATH + " crash'"), 4);
  EXPECT_EQ(run_binary(bridge + "'" + ECHO_HOST_PATH + " echo'"), 0);
  EXPECT_EQ(run_binary("fit-eval --task DX --cohort " + dir.file("c.csv") + " --predictor knn --neighbors 0 --out-dir " +
                       dir.file("o")),
            64);
}

TEST(Cli, FitEvalWithBridgePreset) {
  support::TempDir dir;
  run({"synth", "--patients", "20", "--out", dir.file("c.csv")});
  const auto r = run({"fit-eval", "--task", "ADAS", "--cohort", dir.file("c.csv"), "--predictor", "bridge", "--preset",
                      "tabpfn", "--host", std::string(ECHO_HOST_PATH) + " mean", "--seeds", "1,2,3", "--out-dir",
                      dir.file("r")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto reports = l2c::read_reports(dir.file("r/tabpfn_report.json"));
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].values.size(), 3u);
}
