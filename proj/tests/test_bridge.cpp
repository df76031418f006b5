#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>

#include "l2c/bridge.hpp"
#include "l2c/error.hpp"
#include "l2c/predictors.hpp"
#include "l2c/synth.hpp"
#include "support.hpp"

using namespace l2c;

namespace {

FeatureTable small_table(Task task, std::size_t rows) {
  FeatureTable t;
  t.task = task;
  t.columns = {{"horizon", ColumnRole::Horizon}, {"mr_ADAS13", ColumnRole::Value}};
  for (std::size_t i = 0; i < rows; ++i) {
    std::optional<double> mr;
    if (i % 2 == 0) mr = 10.5 + static_cast<double>(i);
    t.rows.push_back({std::to_string(i), 0, 6.0 + static_cast<double>(i), {6.0 + static_cast<double>(i), mr},
                      static_cast<double>(i % 3)});
  }
  return t;
}

BridgeOptions host(const std::string& mode, const std::string& dump = {}) {
  BridgeOptions o;
  o.command = {ECHO_HOST_PATH, mode};
  if (!dump.empty()) o.command.push_back(dump);
  o.timeout_seconds = 20;
  return o;
}

std::pair<ErrorKind, std::string> failure(const std::string& mode, Task task = Task::DX, double timeout = 20) {
  auto o = host(mode);
  o.timeout_seconds = timeout;
  try {
    bridge_session(o, task, HyperParams::object(), small_table(task, 3), small_table(task, 3));
  } catch (const Error& e) {
    return {e.kind(), e.what()};
  }
  ADD_FAILURE() << "mode " << mode << " did not fail";
  return {ErrorKind::Contract, ""};
}

}  // namespace

TEST(Wire, LineEncodings) {
  const std::vector<Column> cols = {{"horizon", ColumnRole::Horizon}, {"mr_X", ColumnRole::Value}};
  HyperParams h;
  h["n_estimators"] = 31;
  h["softmax_temperature"] = 0.718;
  h["average_before_softmax"] = true;
  EXPECT_EQ(hello_line(Task::Ventricles, cols, h),
            R"({"v":1,"task":"VENT","features":["horizon","mr_X"],"hparams":{"n_estimators":31,)"
            R"("softmax_temperature":0.718,"average_before_softmax":true}})");
  const std::vector<std::optional<double>> x = {6.0, std::nullopt, 0.041};
  EXPECT_EQ(row_line(3, x, 2.0), R"({"id":3,"x":[6.0,null,0.041],"y":2.0})");
  EXPECT_EQ(row_line(0, x, std::nullopt), R"({"id":0,"x":[6.0,null,0.041],"y":null})");
  EXPECT_EQ(end_line("train"), R"({"end":"train"})");
}

TEST(Wire, SplitCommand) {
  EXPECT_EQ(split_command("python3 -m host --model 'tab pfn'"),
            (std::vector<std::string>{"python3", "-m", "host", "--model", "tab pfn"}));
  EXPECT_EQ(split_command(R"(a "b c" d)"), (std::vector<std::string>{"a", "b c", "d"}));
  EXPECT_THROW(split_command("a 'b"), Error);
}

TEST(Session, EchoHostDx) {
  const auto preds =
      bridge_session(host("echo"), Task::DX, HyperParams::object(), small_table(Task::DX, 5), small_table(Task::DX, 3));
  ASSERT_EQ(preds.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(preds[i].probabilities(), (ClassProbabilities{1, 0, 0}));
    EXPECT_EQ(preds[i].patient_id, std::to_string(i));
  }
}

TEST(Session, EchoHostRegressionKeepsOrder) {
  const auto test = small_table(Task::ADAS, 40);
  const auto preds = bridge_session(host("echo"), Task::ADAS, HyperParams::object(), small_table(Task::ADAS, 2), test);
  ASSERT_EQ(preds.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(preds[i].estimate(), *test.rows[i].x[0]);
}

TEST(Session, TranscriptIsByteExact) {
  support::TempDir dir;
  const auto dump = dir.file("received.txt");
  HyperParams h = bridge_preset("tabpfn", Task::Ventricles);
  const auto train = small_table(Task::Ventricles, 2);
  const auto test = small_table(Task::Ventricles, 1);
  bridge_session(host("echo", dump), Task::Ventricles, h, train, test);
  const std::string expected = hello_line(Task::Ventricles, train.columns, h) + "\n" +
                               row_line(0, train.rows[0].x, train.rows[0].y) + "\n" +
                               row_line(1, train.rows[1].x, train.rows[1].y) + "\n" + end_line("train") + "\n" +
                               row_line(0, test.rows[0].x, std::nullopt) + "\n" + end_line("test") + "\n";
  EXPECT_EQ(support::slurp(dump), expected);
  EXPECT_NE(expected.find(R"("n_estimators":31,"softmax_temperature":0.718,"average_before_softmax":true)"),
            std::string::npos);
}

TEST(Session, LargeTablesDoNotDeadlock) {
  const auto train = small_table(Task::ADAS, 20000);
  const auto test = small_table(Task::ADAS, 20000);
  const auto preds = bridge_session(host("mean"), Task::ADAS, HyperParams::object(), train, test);
  ASSERT_EQ(preds.size(), test.rows.size());
  double mean = 0;
  for (const auto& r : train.rows) mean += *r.y;
  EXPECT_NEAR(preds[0].estimate(), mean / static_cast<double>(train.rows.size()), 1e-9);
}

TEST(Session, ErrorPaths) {
  auto [kind, what] = failure("reject");
  EXPECT_EQ(kind, ErrorKind::Bridge);
  EXPECT_NE(what.find("unsupported task"), std::string::npos);

  std::tie(kind, what) = failure("malformed");
  EXPECT_EQ(kind, ErrorKind::Protocol);
  EXPECT_NE(what.find("line 2"), std::string::npos) << what;

  EXPECT_EQ(failure("short").first, ErrorKind::Protocol);
  EXPECT_EQ(failure("extra", Task::ADAS).first, ErrorKind::Protocol);
  EXPECT_EQ(failure("shuffled").first, ErrorKind::Protocol);
  EXPECT_EQ(failure("badnorm").first, ErrorKind::Protocol);
  EXPECT_EQ(failure("quiet").first, ErrorKind::Protocol);

  std::tie(kind, what) = failure("error");
  EXPECT_EQ(kind, ErrorKind::Bridge);
  EXPECT_NE(what.find("inference failed"), std::string::npos);

  std::tie(kind, what) = failure("crash");
  EXPECT_EQ(kind, ErrorKind::Bridge);
  EXPECT_NE(what.find("status 3"), std::string::npos) << what;
  EXPECT_NE(what.find("boom"), std::string::npos) << what;
}

TEST(Session, Timeout) {
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(failure("sleep", Task::DX, 0.5).first, ErrorKind::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}

TEST(Session, MissingExecutable) {
  BridgeOptions o;
  o.command = {"/nonexistent/l2c-host"};
  try {
    bridge_session(o, Task::DX, HyperParams::object(), small_table(Task::DX, 1), small_table(Task::DX, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Bridge);
  }
}

TEST(Session, ThroughPredictorConfig) {
  PredictorConfig c;
  c.kind = PredictorKind::Bridge;
  c.task = Task::DX;
  c.hparams = bridge_preset("gbt", Task::DX);
  c.hparams["host"] = HyperParams::array({ECHO_HOST_PATH, "echo"});
  c.hparams["timeout"] = 30;
  c.validate();
  const auto preds = fit_predict(small_table(Task::DX, 4), small_table(Task::DX, 2), c);
  EXPECT_EQ(preds.size(), 2u);

  c.hparams.erase("host");
  ::setenv(kBridgeHostEnv, (std::string(ECHO_HOST_PATH) + " echo").c_str(), 1);
  EXPECT_EQ(fit_predict(small_table(Task::DX, 4), small_table(Task::DX, 2), c).size(), 2u);
  ::unsetenv(kBridgeHostEnv);
  EXPECT_THROW(c.validate(), Error);
}
