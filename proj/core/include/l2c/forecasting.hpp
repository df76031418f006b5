#pragma once

#include <span>
#include <string>
#include <vector>

#include "l2c/cohort.hpp"
#include "l2c/feature_table.hpp"
#include "l2c/l2c.hpp"
#include "l2c/prediction.hpp"

namespace l2c {

/// Copies of `base` re-targeted to each horizon (months after the cutoff).
/// Time-delta fields, horizon and current_age move with the target month; all
/// value fields stay bit-identical. The outcome is kept only when the target
/// month is unchanged. Throws Error(Contract) for non-positive horizons.
std::vector<L2CRow> sweep_horizons(const L2CRow& base, std::span<const double> horizons);

enum class CutoffPolicy {
  MaximalHistory,  // cutoff = visit immediately preceding each target
  HalfHistory,     // cutoff fixed at floor(n/2) visits per patient
};

CutoffPolicy parse_cutoff_policy(std::string_view name);

/// Evaluation rows for the selected patients: one row per visit with the
/// outcome present and an earlier visit to build history from.
FeatureTable build_test_table(const Cohort& cohort, Task task,
                              CutoffPolicy policy = CutoffPolicy::MaximalHistory,
                              Membership membership = Membership::D2, unsigned jobs = 1);

/// first, first+step, ... up to and including last.
std::vector<double> horizon_grid(double first, double last, double step);

/// Forecast rows from each selected patient's full history (cutoff at the last
/// visit), one per horizon, ordered by patient then horizon.
std::vector<L2CRow> forecast_rows(const Cohort& cohort, Task task, Membership membership,
                                  std::span<const double> horizons);

/// Columns: patient_id, horizon_month, then the prediction columns.
void write_forecast(const std::string& path, Task task, std::span<const L2CRow> rows,
                    const std::vector<PredictionRecord>& predictions);

}  // namespace l2c
