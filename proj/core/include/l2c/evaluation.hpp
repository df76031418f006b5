#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2c/cohort.hpp"
#include "l2c/feature_table.hpp"
#include "l2c/prediction.hpp"

namespace l2c {

/// Hand & Till multiclass AUC. probs[i][k] is the score of class k for sample
/// i; the class count is the row width. Tied scores count one half.
/// Throws Error(Metric) naming any class without samples.
double mauc(std::span<const int> labels, const std::vector<std::vector<double>>& probs);
double mauc(std::span<const int> labels, std::span<const ClassProbabilities> probs);

/// One-vs-rest balanced accuracy averaged over the classes present in labels.
double bca(std::span<const int> labels, std::span<const int> predicted);

double mae(std::span<const double> truth, std::span<const double> estimates);

enum class Sidedness { OneSided, TwoSided };

struct WilcoxonResult {
  std::size_t n = 0;      // non-zero differences
  double w_minus = 0.0;   // rank sum of negative differences
  double w_plus = 0.0;
  double p_value = 1.0;
};

/// Exact signed-rank test over the null distribution of all 2^n sign patterns
/// (average ranks for tied magnitudes, zeros dropped, 1 <= n <= 25).
/// One-sided p = P(W- <= observed W-), i.e. the alternative that differences
/// tend to be positive. Two-sided doubles the smaller tail, capped at 1.
WilcoxonResult wilcoxon_test(std::span<const double> differences, Sidedness sidedness = Sidedness::OneSided);
double wilcoxon_exact(std::span<const double> differences, Sidedness sidedness = Sidedness::OneSided);

enum class Metric { MAUC, BCA, MAE };

std::string_view metric_name(Metric metric) noexcept;
Metric parse_metric(std::string_view name);
constexpr bool higher_is_better(Metric metric) noexcept { return metric != Metric::MAE; }

/// Metrics reported for a task: MAUC and BCA for DX, MAE otherwise.
std::vector<Metric> task_metrics(Task task);

struct MetricValue {
  Metric metric;
  double value;
};

/// Scores predictions against the targets of the rows they were made for.
std::vector<MetricValue> evaluate(const FeatureTable& truth, const std::vector<PredictionRecord>& predictions);

inline constexpr double kSignificanceLevel = 0.05;

struct Comparison {
  std::string opponent;
  std::vector<double> opponent_values;
  double opponent_mean = 0.0;
  double opponent_std = 0.0;
  std::string best;  // model whose mean is better
  double p_value = 1.0;
  bool significant = false;  // p <= 0.05
  Sidedness sidedness = Sidedness::OneSided;
};

struct MetricReport {
  Task task = Task::DX;
  Metric metric = Metric::MAE;
  std::string model;
  std::vector<std::uint64_t> seeds;
  std::vector<double> values;  // one per seed
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single seed
  std::optional<Comparison> comparison;
};

MetricReport make_report(Task task, Metric metric, std::string model, std::vector<std::uint64_t> seeds,
                         std::vector<double> values);

/// Pairs per-seed values of two reports on the same task and metric, tests the
/// better model's per-seed advantage and records the result on a copy of `a`.
MetricReport compare(const MetricReport& a, const MetricReport& b, Sidedness sidedness = Sidedness::OneSided);

nlohmann::ordered_json to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::json& j);

/// {"model": ..., "reports": [...]} files written by fit-eval and read by compare.
void write_reports(const std::string& path, const std::string& model, const std::vector<MetricReport>& reports);
std::vector<MetricReport> read_reports(const std::string& path);

/// Plain-text table; comparison rows use Task | Metric | A | B | p-value | Significance.
void print_reports(std::ostream& out, const std::vector<MetricReport>& reports);

}  // namespace l2c
