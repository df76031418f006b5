#include "l2c/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "l2c/error.hpp"

namespace l2c {
namespace {

/// Probability that a score from `pos` exceeds one from `neg`, ties counted half,
/// via the rank-sum identity.
double rank_auc(std::vector<std::pair<double, bool>>& scored, std::size_t n_pos, std::size_t n_neg) {
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (scored[t].second) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

double mauc(std::span<const int> labels, const std::vector<std::vector<double>>& probs) {
  require(labels.size() == probs.size(), "labels and probabilities differ in length");
  if (probs.empty()) fail(ErrorKind::Metric, "MAUC of an empty sample");
  const std::size_t c = probs.front().size();
  require(c >= 2, "MAUC needs at least two classes");
  std::vector<std::size_t> counts(c, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(probs[i].size() == c, "probability rows differ in width");
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < c,
            "label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(c) + ")");
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] == 0) fail(ErrorKind::Metric, "class " + std::to_string(k) + " has no samples; MAUC undefined");
  }

  std::vector<std::pair<double, bool>> scored;
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = i + 1; j < c; ++j) {
      // A(i|j): class-i score ranks class i above class j
      auto a = [&](std::size_t pos, std::size_t neg) {
        scored.clear();
        for (std::size_t s = 0; s < labels.size(); ++s) {
          const auto y = static_cast<std::size_t>(labels[s]);
          if (y == pos || y == neg) scored.emplace_back(probs[s][pos], y == pos);
        }
        return rank_auc(scored, counts[pos], counts[neg]);
      };
      total += (a(i, j) + a(j, i)) / 2.0;
    }
  }
  return 2.0 * total / (static_cast<double>(c) * static_cast<double>(c - 1));
}

double mauc(std::span<const int> labels, std::span<const ClassProbabilities> probs) {
  std::vector<std::vector<double>> rows;
  rows.reserve(probs.size());
  for (const auto& p : probs) rows.emplace_back(p.begin(), p.end());
  return mauc(labels, rows);
}

double bca(std::span<const int> labels, std::span<const int> predicted) {
  require(labels.size() == predicted.size(), "labels and predictions differ in length");
  if (labels.empty()) fail(ErrorKind::Metric, "BCA of an empty sample");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) fail(ErrorKind::Metric, "BCA needs at least two classes in the labels");

  double sum = 0.0;
  for (int k : classes) {
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool actual = labels[i] == k;
      const bool guess = predicted[i] == k;
      if (actual && guess) ++tp;
      if (actual && !guess) ++fn;
      if (!actual && !guess) ++tn;
      if (!actual && guess) ++fp;
    }
    sum += 0.5 * (tp / (tp + fn) + tn / (tn + fp));
  }
  return sum / static_cast<double>(classes.size());
}

double mae(std::span<const double> truth, std::span<const double> estimates) {
  require(truth.size() == estimates.size(), "truth and estimates differ in length");
  require(!truth.empty(), "MAE of an empty sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(std::isfinite(truth[i]) && std::isfinite(estimates[i]), "MAE inputs must be finite");
    sum += std::abs(truth[i] - estimates[i]);
  }
  return sum / static_cast<double>(truth.size());
}

WilcoxonResult wilcoxon_test(std::span<const double> differences, Sidedness sidedness) {
  std::vector<double> d;
  for (double x : differences) {
    require(std::isfinite(x), "differences must be finite");
    if (x != 0.0) d.push_back(x);
  }
  if (d.empty()) fail(ErrorKind::Metric, "all differences are zero; signed-rank test undefined");
  require(d.size() <= 25, "exact signed-rank test supports at most 25 non-zero differences");
  const std::size_t n = d.size();

  // doubled average ranks are integers
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<unsigned> rank2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    for (std::size_t t = i; t < j; ++t) rank2[order[t]] = static_cast<unsigned>(i + 1 + j);
    i = j;
  }

  WilcoxonResult r;
  r.n = n;
  unsigned observed2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] < 0) observed2 += rank2[i];
  }
  r.w_minus = observed2 / 2.0;
  r.w_plus = (total2 - observed2) / 2.0;

  // counts[s]: sign patterns whose negative doubled-rank sum is s
  std::vector<std::uint64_t> counts(total2 + 1, 0);
  counts[0] = 1;
  for (unsigned w : rank2) {
    for (std::size_t s = total2; s >= w; --s) {
      counts[s] += counts[s - w];
      if (s == w) break;
    }
  }
  const double patterns = std::ldexp(1.0, static_cast<int>(n));
  auto cdf = [&](unsigned s) {
    std::uint64_t c = 0;
    for (unsigned v = 0; v <= s; ++v) c += counts[v];
    return static_cast<double>(c) / patterns;
  };
  const double lower = cdf(observed2);
  if (sidedness == Sidedness::OneSided) {
    r.p_value = lower;
  } else {
    const double upper = cdf(total2 - observed2);  // P(W+ <= observed W+) by symmetry
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
  }
  return r;
}

double wilcoxon_exact(std::span<const double> differences, Sidedness sidedness) {
  return wilcoxon_test(differences, sidedness).p_value;
}

std::string_view metric_name(Metric metric) noexcept {
  switch (metric) {
    case Metric::MAUC: return "MAUC";
    case Metric::BCA: return "BCA";
    case Metric::MAE: return "MAE";
  }
  return "";
}

Metric parse_metric(std::string_view name) {
  if (name == "MAUC") return Metric::MAUC;
  if (name == "BCA") return Metric::BCA;
  if (name == "MAE") return Metric::MAE;
  fail(ErrorKind::Schema, "unknown metric '" + std::string(name) + "'");
}

std::vector<Metric> task_metrics(Task task) {
  if (is_classification(task)) return {Metric::MAUC, Metric::BCA};
  return {Metric::MAE};
}

std::vector<MetricValue> evaluate(const FeatureTable& truth, const std::vector<PredictionRecord>& predictions) {
  require(truth.rows.size() == predictions.size(), "one prediction per row required");
  std::vector<MetricValue> out;
  if (is_classification(truth.task)) {
    std::vector<int> labels, guesses;
    std::vector<ClassProbabilities> probs;
    for (std::size_t i = 0; i < truth.rows.size(); ++i) {
      if (!truth.rows[i].y) continue;
      labels.push_back(static_cast<int>(*truth.rows[i].y));
      probs.push_back(predictions[i].probabilities());
      guesses.push_back(argmax(probs.back()));
    }
    out.push_back({Metric::MAUC, mauc(labels, probs)});
    out.push_back({Metric::BCA, bca(labels, guesses)});
  } else {
    std::vector<double> y, yhat;
    for (std::size_t i = 0; i < truth.rows.size(); ++i) {
      if (!truth.rows[i].y) continue;
      y.push_back(*truth.rows[i].y);
      yhat.push_back(predictions[i].estimate());
    }
    if (y.empty()) fail(ErrorKind::Metric, "no rows with targets to evaluate");
    out.push_back({Metric::MAE, mae(y, yhat)});
  }
  return out;
}

MetricReport make_report(Task task, Metric metric, std::string model, std::vector<std::uint64_t> seeds,
                         std::vector<double> values) {
  require(!values.empty(), "report needs at least one value");
  require(seeds.size() == values.size(), "one value per seed required");
  MetricReport r;
  r.task = task;
  r.metric = metric;
  r.model = std::move(model);
  r.seeds = std::move(seeds);
  r.values = std::move(values);
  r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / static_cast<double>(r.values.size());
  r.std = sample_std(r.values, r.mean);
  return r;
}

MetricReport compare(const MetricReport& a, const MetricReport& b, Sidedness sidedness) {
  if (a.task != b.task || a.metric != b.metric) {
    fail(ErrorKind::Schema, "cannot compare " + std::string(task_name(a.task)) + "/" +
                                std::string(metric_name(a.metric)) + " with " + std::string(task_name(b.task)) +
                                "/" + std::string(metric_name(b.metric)));
  }
  if (a.values.size() != b.values.size()) {
    fail(ErrorKind::Schema, "reports differ in seed count (" + std::to_string(a.values.size()) + " vs " +
                                std::to_string(b.values.size()) + ")");
  }
  const bool higher = higher_is_better(a.metric);
  const bool a_best = higher ? a.mean >= b.mean : a.mean <= b.mean;
  const auto& best = a_best ? a : b;
  const auto& other = a_best ? b : a;
  std::vector<double> advantage(a.values.size());
  for (std::size_t i = 0; i < advantage.size(); ++i) {
    advantage[i] = higher ? best.values[i] - other.values[i] : other.values[i] - best.values[i];
  }

  MetricReport out = a;
  Comparison c;
  c.opponent = b.model;
  c.opponent_values = b.values;
  c.opponent_mean = b.mean;
  c.opponent_std = b.std;
  c.best = best.model;
  c.p_value = wilcoxon_exact(advantage, sidedness);
  c.significant = c.p_value <= kSignificanceLevel;
  c.sidedness = sidedness;
  out.comparison = std::move(c);
  return out;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["task"] = task_name(r.task);
  j["metric"] = metric_name(r.metric);
  j["model"] = r.model;
  j["seeds"] = r.seeds;
  j["values"] = r.values;
  j["mean"] = r.mean;
  j["std"] = r.std;
  if (r.comparison) {
    const auto& c = *r.comparison;
    j["comparison"] = {{"opponent", c.opponent},
                       {"opponent_values", c.opponent_values},
                       {"opponent_mean", c.opponent_mean},
                       {"opponent_std", c.opponent_std},
                       {"best", c.best},
                       {"p_value", c.p_value},
                       {"significant", c.significant},
                       {"sidedness", c.sidedness == Sidedness::OneSided ? "one-sided" : "two-sided"}};
  }
  return j;
}

MetricReport report_from_json(const nlohmann::json& j) {
  try {
    auto seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    auto values = j.at("values").get<std::vector<double>>();
    auto r = make_report(parse_task(j.at("task").get<std::string>()), parse_metric(j.at("metric").get<std::string>()),
                         j.value("model", std::string("model")), std::move(seeds), std::move(values));
    if (j.contains("comparison")) {
      const auto& c = j["comparison"];
      Comparison cmp;
      cmp.opponent = c.at("opponent").get<std::string>();
      cmp.opponent_values = c.at("opponent_values").get<std::vector<double>>();
      cmp.opponent_mean = c.at("opponent_mean").get<double>();
      cmp.opponent_std = c.at("opponent_std").get<double>();
      cmp.best = c.at("best").get<std::string>();
      cmp.p_value = c.at("p_value").get<double>();
      cmp.significant = c.at("significant").get<bool>();
      cmp.sidedness = c.value("sidedness", std::string("one-sided")) == "two-sided" ? Sidedness::TwoSided
                                                                                  : Sidedness::OneSided;
      r.comparison = std::move(cmp);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, std::string("malformed metric report: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Contract) fail(ErrorKind::Schema, std::string("malformed metric report: ") + e.what());
    throw;
  }
}

void write_reports(const std::string& path, const std::string& model, const std::vector<MetricReport>& reports) {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(to_json(r));
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

std::vector<MetricReport> read_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
  std::vector<MetricReport> reports;
  if (j.is_object() && j.contains("reports")) {
    for (const auto& r : j["reports"]) {
      auto report = report_from_json(r);
      if (!r.contains("model") && j.contains("model")) report.model = j["model"].get<std::string>();
      reports.push_back(std::move(report));
    }
  } else if (j.is_object()) {
    reports.push_back(report_from_json(j));
  } else {
    fail(ErrorKind::Schema, path + ": expected a report object");
  }
  return reports;
}

void print_reports(std::ostream& out, const std::vector<MetricReport>& reports) {
  const bool any_comparison =
      std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.comparison.has_value(); });
  auto cell = [&](const std::string& s, int width) { out << std::left << std::setw(width) << s; };
  if (!any_comparison) {
    cell("Task", 12), cell("Metric", 8), cell("Model", 20), cell("Mean +- Std", 22), out << "Values\n";
    for (const auto& r : reports) {
      cell(std::string(task_name(r.task)), 12);
      cell(std::string(metric_name(r.metric)), 8);
      cell(r.model, 20);
      cell(fixed(r.mean) + " +- " + fixed(r.std), 22);
      for (std::size_t i = 0; i < r.values.size(); ++i) out << (i ? " " : "") << fixed(r.values[i]);
      out << '\n';
    }
    return;
  }
  const auto& first = reports.front();
  const std::string a_name = first.model;
  const std::string b_name = first.comparison ? first.comparison->opponent : "opponent";
  const std::string a_head = a_name + " (Mean +- Std)";
  const std::string b_head = b_name + " (Mean +- Std)";
  const int a_width = static_cast<int>(std::max<std::size_t>(a_head.size() + 2, 24));
  const int b_width = static_cast<int>(std::max<std::size_t>(b_head.size() + 2, 24));
  const int best_width = static_cast<int>(std::max(a_name.size(), b_name.size()) + 2);
  cell("Task", 12), cell("Metric", 8), cell(a_head, a_width), cell(b_head, b_width);
  cell("Best", std::max(best_width, 6)), cell("p-value", 10), out << "Significance\n";
  for (const auto& r : reports) {
    if (!r.comparison) continue;
    const auto& c = *r.comparison;
    cell(std::string(task_name(r.task)), 12);
    cell(std::string(metric_name(r.metric)), 8);
    cell(fixed(r.mean) + " +- " + fixed(r.std), a_width);
    cell(fixed(c.opponent_mean) + " +- " + fixed(c.opponent_std), b_width);
    cell(c.best, std::max(best_width, 6));
    cell(fixed(c.p_value), 10);
    out << (c.significant ? "*" : "") << '\n';
  }
}

}  // namespace l2c
