#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "l2c/bridge.hpp"
#include "l2c/feature_table.hpp"
#include "l2c/prediction.hpp"

namespace l2c {

enum class PredictorKind { ConstantMedian, CarryForward, Knn, Bridge };

PredictorKind parse_predictor_kind(std::string_view name);
std::string_view to_string(PredictorKind kind) noexcept;

/// Hyperparameters are a JSON object. Required keys: knn needs integer "k" >= 1;
/// bridge needs "host" (string or argv array) unless L2C_BRIDGE_HOST is set.
/// Bridge keys "host" and "timeout" configure the client and are not forwarded.
struct PredictorConfig {
  PredictorKind kind = PredictorKind::ConstantMedian;
  Task task = Task::DX;
  HyperParams hparams = HyperParams::object();

  /// Throws Error(Config) when a kind-specific key is missing or invalid.
  void validate() const;
};

/// Median of the values; the mean of the two middle values for even counts.
double median(std::vector<double> values);

/// Per-column z-score statistics over the present values of a training table.
/// Columns with fewer than two present values or zero spread are not scaled
/// and take no part in distances.
class ZScaler {
 public:
  explicit ZScaler(const FeatureTable& train);
  ZScaler(std::vector<std::optional<double>> means, std::vector<std::optional<double>> sds);

  std::vector<std::optional<double>> transform(std::span<const std::optional<double>> x) const;

 private:
  std::vector<std::optional<double>> means_;
  std::vector<std::optional<double>> sds_;
};

/// Root mean squared difference over mutually present z-scored fields;
/// +infinity when no field is present in both rows.
double knn_distance(std::span<const std::optional<double>> za, std::span<const std::optional<double>> zb);

/// Bridge-host presets holding the tuned hyperparameters for model "tabpfn"
/// or "gbt" (gradient-boosted trees) on a task.
HyperParams bridge_preset(std::string_view model, Task task);

/// One PredictionRecord per test row, in test-row order.
std::vector<PredictionRecord> fit_predict(const FeatureTable& train, const FeatureTable& test,
                                          const PredictorConfig& config, unsigned jobs = 1);

}  // namespace l2c
