#include "l2c/forecasting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "l2c/augmentation.hpp"
#include "l2c/csv.hpp"
#include "l2c/error.hpp"
#include "l2c/parallel.hpp"
#include "l2c/splitting.hpp"

namespace l2c {

std::vector<L2CRow> sweep_horizons(const L2CRow& base, std::span<const double> horizons) {
  std::vector<L2CRow> rows;
  rows.reserve(horizons.size());
  for (double h : horizons) {
    require(std::isfinite(h) && h > 0.0, "horizon must be positive, got " + csv::format_number(h));
    L2CRow row = base;
    const double target = base.cutoff_month + h;
    if (target != base.target_month) {
      row.target_month = target;
      row.target.reset();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

CutoffPolicy parse_cutoff_policy(std::string_view name) {
  if (name == "maximal" || name == "maximal-history") return CutoffPolicy::MaximalHistory;
  if (name == "half" || name == "half-history") return CutoffPolicy::HalfHistory;
  fail(ErrorKind::Config, "unknown cutoff policy '" + std::string(name) + "' (expected maximal or half)");
}

FeatureTable build_test_table(const Cohort& cohort, Task task, CutoffPolicy policy, Membership membership,
                              unsigned jobs) {
  const RowBuilder builder(cohort, task);
  std::vector<const PatientHistory*> patients;
  for (const auto& p : cohort.patients) {
    if (selected(p, membership)) patients.push_back(&p);
  }
  std::vector<std::vector<L2CRow>> per_patient(patients.size());
  parallel_for(patients.size(), jobs, [&](std::size_t i) {
    per_patient[i] = policy == CutoffPolicy::MaximalHistory ? consecutive_rows(builder, *patients[i])
                                                            : validation_rows(builder, *patients[i]);
  });
  std::vector<L2CRow> rows;
  for (auto& chunk : per_patient) {
    rows.insert(rows.end(), std::make_move_iterator(chunk.begin()), std::make_move_iterator(chunk.end()));
  }
  sort_rows(rows);
  return FeatureTable::from_rows(task, cohort.features, rows);
}

std::vector<double> horizon_grid(double first, double last, double step) {
  require(first > 0.0 && step > 0.0 && last >= first, "horizon grid needs 0 < first <= last and step > 0");
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double h = first + static_cast<double>(i) * step;
    if (h > last) break;
    grid.push_back(h);
  }
  return grid;
}

std::vector<L2CRow> forecast_rows(const Cohort& cohort, Task task, Membership membership,
                                  std::span<const double> horizons) {
  require(!horizons.empty(), "forecast needs at least one horizon");
  const RowBuilder builder(cohort, task);
  std::vector<L2CRow> rows;
  for (const auto& p : cohort.patients) {
    if (!selected(p, membership) || p.visits.empty()) continue;
    const std::size_t last = p.visits.size() - 1;
    const auto base = builder.build(p, last, p.visits[last].month + horizons.front());
    for (auto& r : sweep_horizons(base, horizons)) rows.push_back(std::move(r));
  }
  return rows;
}

void write_forecast(const std::string& path, Task task, std::span<const L2CRow> rows,
                    const std::vector<PredictionRecord>& predictions) {
  require(rows.size() == predictions.size(), "one prediction per forecast row required");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  if (is_classification(task)) {
    csv::write_record(out, {"patient_id", "horizon_month", "p_CN", "p_MCI", "p_AD"});
  } else {
    csv::write_record(out, {"patient_id", "horizon_month", "estimate"});
  }
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    fields = {rows[i].patient_id, csv::format_number(rows[i].horizon())};
    const auto& p = predictions[i];
    if (p.has_probabilities()) {
      for (double v : p.probabilities()) fields.push_back(csv::format_number(v));
    } else {
      fields.push_back(csv::format_number(p.estimate()));
    }
    csv::write_record(out, fields);
  }
}

}  // namespace l2c
