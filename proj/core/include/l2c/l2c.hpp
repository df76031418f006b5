#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "l2c/cohort.hpp"

namespace l2c {

struct Observation {
  double month = 0.0;
  double value = 0.0;
};

struct DxObservation {
  double month = 0.0;
  Diagnosis dx = Diagnosis::CN;
};

/// Summary of one numeric feature relative to a target month t.
struct NumericSummary {
  std::optional<double> mr;         // most recent value
  std::optional<double> dt_mr;      // t - month of the most recent value
  std::optional<double> mr_change;  // slope between the two latest observations
  std::optional<double> low;
  std::optional<double> dt_low;     // t - earliest month attaining low
  std::optional<double> high;
  std::optional<double> dt_high;    // t - earliest month attaining high

  bool operator==(const NumericSummary&) const = default;
};

struct DxSummary {
  std::optional<Diagnosis> mr_dx;
  std::optional<double> dt_mr_dx;
  std::optional<Diagnosis> best_dx;   // ordinal minimum
  std::optional<double> dt_best;
  std::optional<Diagnosis> worst_dx;  // ordinal maximum
  std::optional<double> dt_worst;
  std::optional<bool> milder_flag;    // mr_dx < worst_dx

  bool operator==(const DxSummary&) const = default;
};

/// Target-independent part of a NumericSummary: values plus the months they
/// were observed at. Time deltas are resolved against a target month later.
struct NumericAnchors {
  std::optional<double> mr, mr_change, low, high;
  std::optional<double> mr_month, low_month, high_month;

  NumericSummary at(double target_month) const;
  bool operator==(const NumericAnchors&) const = default;
};

struct DxAnchors {
  std::optional<Diagnosis> mr, best, worst;
  std::optional<double> mr_month, best_month, worst_month;

  DxSummary at(double target_month) const;
  bool operator==(const DxAnchors&) const = default;
};

/// Observations must be strictly increasing in month.
NumericAnchors anchor_numeric(std::span<const Observation> observations);
DxAnchors anchor_diagnosis(std::span<const DxObservation> observations);

/// Summary statistics of a feature's history before month t. All observation
/// months must be strictly increasing and < t, otherwise Error(Contract).
NumericSummary summarize_numeric(std::span<const Observation> observations, double t);
DxSummary summarize_diagnosis(std::span<const DxObservation> observations, double t);

/// One cross-sectional snapshot: the history up to and including the cutoff
/// visit, summarized for prediction at the target month.
struct L2CRow {
  std::string patient_id;
  double cutoff_month = 0.0;
  double target_month = 0.0;
  std::vector<NumericAnchors> features;  // indexed like Cohort::features
  DxAnchors dx;
  Demographics demographics;
  std::optional<double> target;  // diagnosis code for DX, scalar otherwise

  double horizon() const noexcept { return target_month - cutoff_month; }
  NumericSummary numeric(std::size_t feature) const { return features.at(feature).at(target_month); }
  DxSummary diagnosis() const { return dx.at(target_month); }
  std::optional<double> current_age() const;

  bool operator==(const L2CRow&) const = default;
};

enum class ColumnRole {
  Horizon,
  Value,        // mr_X, mr_change_X, low_X, high_X
  TimeDelta,    // time_since_*_X
  DxState,      // mr_DX, best_DX, worst_DX
  DxTimeDelta,  // time_since_*_DX
  DxFlag,       // milder_DX
  Demographic,
  Age,          // current_age
};

std::string_view to_string(ColumnRole role) noexcept;

struct Column {
  std::string name;
  ColumnRole role;

  bool operator==(const Column&) const = default;
};

/// Model-facing feature columns for a feature list, in flatten() order.
std::vector<Column> row_columns(std::span<const std::string> features);

/// Model-facing feature vector of a row; missing stays missing.
std::vector<std::optional<double>> flatten(const L2CRow& row);

/// Builds rows for one cohort and task. History summaries depend only on the
/// cutoff, so they are computed once and reused across targets.
class RowBuilder {
 public:
  RowBuilder(const Cohort& cohort, Task task);

  /// Summaries of visits[0..=cutoff_index]; target_month is left unset.
  L2CRow history(const PatientHistory& patient, std::size_t cutoff_index) const;

  /// Row for predicting target_month from visits[0..=cutoff_index].
  /// target_month must be later than the cutoff visit.
  L2CRow build(const PatientHistory& patient, std::size_t cutoff_index, double target_month) const;

  /// Re-targets a history row; fills the outcome when a visit exists at target_month.
  L2CRow retarget(L2CRow row, const PatientHistory& patient, double target_month) const;

  const OutcomeReader& outcome() const noexcept { return outcome_; }

 private:
  std::size_t feature_count_;
  OutcomeReader outcome_;
};

L2CRow build_row(const Cohort& cohort, const PatientHistory& patient, std::size_t cutoff_index,
                 double target_month, Task task);

}  // namespace l2c
