#include "l2c/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "l2c/error.hpp"
#include "l2c/parallel.hpp"

namespace l2c {
namespace {

std::vector<double> train_targets(const FeatureTable& train) {
  std::vector<double> y;
  y.reserve(train.rows.size());
  for (const auto& r : train.rows) {
    if (r.y) y.push_back(*r.y);
  }
  if (y.empty()) fail(ErrorKind::Contract, "training table has no targets");
  return y;
}

ClassProbabilities class_frequencies(std::span<const double> labels) {
  ClassProbabilities p{};
  for (double y : labels) p.at(static_cast<std::size_t>(y)) += 1.0;
  for (double& v : p) v /= static_cast<double>(labels.size());
  return p;
}

ClassProbabilities one_hot(double label) {
  ClassProbabilities p{};
  p.at(static_cast<std::size_t>(label)) = 1.0;
  return p;
}

/// Constant fallback: class frequencies for DX, target median otherwise.
class Prior {
 public:
  Prior(const FeatureTable& train) {
    auto y = train_targets(train);
    if (is_classification(train.task)) {
      value_ = class_frequencies(y);
    } else {
      value_ = median(std::move(y));
    }
  }
  const std::variant<ClassProbabilities, double>& value() const { return value_; }

 private:
  std::variant<ClassProbabilities, double> value_;
};

PredictionRecord record(const TableRow& row, std::variant<ClassProbabilities, double> value) {
  return PredictionRecord{row.patient_id, row.target_month, std::move(value)};
}

std::string_view carry_forward_column(Task task) {
  switch (task) {
    case Task::DX: return "mr_DX";
    case Task::ADAS: return "mr_ADAS13";
    case Task::Ventricles: return "mr_Ventricles_ICV";
  }
  return "";
}

std::vector<PredictionRecord> predict_constant(const FeatureTable& train, const FeatureTable& test) {
  const Prior prior(train);
  std::vector<PredictionRecord> out;
  out.reserve(test.rows.size());
  for (const auto& r : test.rows) out.push_back(record(r, prior.value()));
  return out;
}

std::vector<PredictionRecord> predict_carry_forward(const FeatureTable& train, const FeatureTable& test) {
  const Prior prior(train);
  const auto name = carry_forward_column(test.task);
  const auto col = test.column_index(name);
  if (!col) fail(ErrorKind::Schema, "carry-forward needs column " + std::string(name));
  std::vector<PredictionRecord> out;
  out.reserve(test.rows.size());
  for (const auto& r : test.rows) {
    const auto& last = r.x[*col];
    if (!last) {
      out.push_back(record(r, prior.value()));
    } else if (is_classification(test.task)) {
      out.push_back(record(r, one_hot(*last)));
    } else {
      out.push_back(record(r, *last));
    }
  }
  return out;
}

std::vector<PredictionRecord> predict_knn(const FeatureTable& train, const FeatureTable& test,
                                          std::size_t k, unsigned jobs) {
  const Prior prior(train);
  const ZScaler scaler(train);
  std::vector<std::vector<std::optional<double>>> z_train;
  std::vector<double> y_train;
  for (const auto& r : train.rows) {
    if (!r.y) continue;
    z_train.push_back(scaler.transform(r.x));
    y_train.push_back(*r.y);
  }

  std::vector<PredictionRecord> out(test.rows.size());
  parallel_for(test.rows.size(), jobs, [&](std::size_t i) {
    const auto& row = test.rows[i];
    const auto z = scaler.transform(row.x);
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(z_train.size());
    for (std::size_t j = 0; j < z_train.size(); ++j) {
      const double d = knn_distance(z, z_train[j]);
      if (std::isfinite(d)) dist.emplace_back(d, j);
    }
    if (dist.empty()) {
      out[i] = record(row, prior.value());
      return;
    }
    const std::size_t take = std::min(k, dist.size());
    // (distance, train index) ordering breaks ties by index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(take), dist.end());
    if (is_classification(test.task)) {
      ClassProbabilities p{};
      for (std::size_t n = 0; n < take; ++n) p.at(static_cast<std::size_t>(y_train[dist[n].second])) += 1.0;
      for (double& v : p) v /= static_cast<double>(take);
      out[i] = record(row, p);
    } else {
      double sum = 0.0;
      for (std::size_t n = 0; n < take; ++n) sum += y_train[dist[n].second];
      out[i] = record(row, sum / static_cast<double>(take));
    }
  });
  return out;
}

std::vector<std::string> host_command(const HyperParams& hparams) {
  if (hparams.contains("host")) {
    const auto& host = hparams["host"];
    if (host.is_string()) return split_command(host.get<std::string>());
    if (host.is_array()) {
      std::vector<std::string> argv;
      for (const auto& a : host) {
        if (!a.is_string()) fail(ErrorKind::Config, "bridge host argv entries must be strings");
        argv.push_back(a.get<std::string>());
      }
      return argv;
    }
    fail(ErrorKind::Config, "bridge 'host' must be a string or an array of strings");
  }
  if (const char* env = std::getenv(kBridgeHostEnv); env && *env) return split_command(env);
  return {};
}

}  // namespace

PredictorKind parse_predictor_kind(std::string_view name) {
  if (name == "constant-median" || name == "median") return PredictorKind::ConstantMedian;
  if (name == "carry-forward" || name == "locf") return PredictorKind::CarryForward;
  if (name == "knn") return PredictorKind::Knn;
  if (name == "bridge") return PredictorKind::Bridge;
  fail(ErrorKind::Config, "unknown predictor '" + std::string(name) +
                              "' (expected constant-median, carry-forward, knn or bridge)");
}

std::string_view to_string(PredictorKind kind) noexcept {
  switch (kind) {
    case PredictorKind::ConstantMedian: return "constant-median";
    case PredictorKind::CarryForward: return "carry-forward";
    case PredictorKind::Knn: return "knn";
    case PredictorKind::Bridge: return "bridge";
  }
  return "";
}

void PredictorConfig::validate() const {
  if (!hparams.is_object()) fail(ErrorKind::Config, "hyperparameters must be a key-value object");
  if (kind == PredictorKind::Knn) {
    if (!hparams.contains("k")) fail(ErrorKind::Config, "knn requires hyperparameter k");
    const auto& k = hparams["k"];
    if (!k.is_number_integer() || k.get<long long>() < 1) {
      fail(ErrorKind::Config, "knn hyperparameter k must be an integer >= 1");
    }
  }
  if (kind == PredictorKind::Bridge) {
    if (host_command(hparams).empty()) {
      fail(ErrorKind::Config, std::string("bridge requires a host command (hyperparameter 'host' or ") +
                                  kBridgeHostEnv + ")");
    }
    if (hparams.contains("timeout") && !(hparams["timeout"].is_number() && hparams["timeout"].get<double>() > 0)) {
      fail(ErrorKind::Config, "bridge timeout must be a positive number of seconds");
    }
  }
}

double median(std::vector<double> values) {
  require(!values.empty(), "median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

ZScaler::ZScaler(const FeatureTable& train) {
  const std::size_t cols = train.columns.size();
  means_.assign(cols, std::nullopt);
  sds_.assign(cols, std::nullopt);
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : train.rows) {
      if (r.x[c]) {
        sum += *r.x[c];
        ++n;
      }
    }
    if (n < 2) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& r : train.rows) {
      if (r.x[c]) ss += (*r.x[c] - mean) * (*r.x[c] - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));  // population spread
    if (sd > 0.0) {
      means_[c] = mean;
      sds_[c] = sd;
    }
  }
}

ZScaler::ZScaler(std::vector<std::optional<double>> means, std::vector<std::optional<double>> sds)
    : means_(std::move(means)), sds_(std::move(sds)) {
  require(means_.size() == sds_.size(), "scaler statistics size mismatch");
}

std::vector<std::optional<double>> ZScaler::transform(std::span<const std::optional<double>> x) const {
  require(x.size() == means_.size(), "row width does not match scaler");
  std::vector<std::optional<double>> z(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (x[c] && means_[c]) z[c] = (*x[c] - *means_[c]) / *sds_[c];
  }
  return z;
}

double knn_distance(std::span<const std::optional<double>> za, std::span<const std::optional<double>> zb) {
  require(za.size() == zb.size(), "rows of different width");
  double ss = 0.0;
  std::size_t shared = 0;
  for (std::size_t c = 0; c < za.size(); ++c) {
    if (za[c] && zb[c]) {
      const double d = *za[c] - *zb[c];
      ss += d * d;
      ++shared;
    }
  }
  if (shared == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(ss / static_cast<double>(shared));
}

HyperParams bridge_preset(std::string_view model, Task task) {
  HyperParams h = HyperParams::object();
  if (model == "tabpfn") {
    h["model"] = "tabpfn";
    switch (task) {
      case Task::Ventricles:
        h["n_estimators"] = 31;
        h["softmax_temperature"] = 0.718;
        break;
      case Task::ADAS:
        h["n_estimators"] = 9;
        h["softmax_temperature"] = 1.212;
        break;
      case Task::DX:
        h["n_estimators"] = 25;
        h["softmax_temperature"] = 1.981;
        break;
    }
    h["average_before_softmax"] = true;
    return h;
  }
  if (model == "gbt") {
    h["model"] = "gbt";
    switch (task) {
      case Task::Ventricles:
        h["max_depth"] = 3;
        h["subsample"] = 0.5826;
        h["learning_rate"] = 0.0149;
        h["n_estimators"] = 650;
        break;
      case Task::ADAS:
        h["max_depth"] = 4;
        h["subsample"] = 0.5464;
        h["learning_rate"] = 0.0138;
        h["n_estimators"] = 500;
        break;
      case Task::DX:
        h["max_depth"] = 3;
        h["subsample"] = 0.4618;
        h["learning_rate"] = 0.0102;
        h["n_estimators"] = 850;
        break;
    }
    return h;
  }
  fail(ErrorKind::Config, "unknown bridge preset '" + std::string(model) + "' (expected tabpfn or gbt)");
}

std::vector<PredictionRecord> fit_predict(const FeatureTable& train, const FeatureTable& test,
                                          const PredictorConfig& config, unsigned jobs) {
  config.validate();
  require(train.same_schema(test), "train and test tables do not share a schema");
  require(train.task == config.task, "predictor task does not match the tables");
  require(!train.rows.empty(), "training table is empty");

  switch (config.kind) {
    case PredictorKind::ConstantMedian: return predict_constant(train, test);
    case PredictorKind::CarryForward: return predict_carry_forward(train, test);
    case PredictorKind::Knn:
      return predict_knn(train, test, config.hparams["k"].get<std::size_t>(), jobs);
    case PredictorKind::Bridge: {
      BridgeOptions options;
      options.command = host_command(config.hparams);
      if (config.hparams.contains("timeout")) options.timeout_seconds = config.hparams["timeout"].get<double>();
      HyperParams forwarded = config.hparams;
      forwarded.erase("host");
      forwarded.erase("timeout");
      return bridge_session(options, config.task, forwarded, train, test);
    }
  }
  return {};
}

}  // namespace l2c
