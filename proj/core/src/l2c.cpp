#include "l2c/l2c.hpp"

#include <algorithm>

#include "l2c/csv.hpp"
#include "l2c/error.hpp"

namespace l2c {
namespace {

template <typename T>
void check_history(std::span<const T> observations, double t) {
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (i > 0 && !(observations[i - 1].month < observations[i].month)) {
      fail(ErrorKind::Contract, "observations must be strictly increasing in month");
    }
    if (!(observations[i].month < t)) {
      fail(ErrorKind::Contract, "observation at month " + csv::format_number(observations[i].month) +
                                    " is not before target month " + csv::format_number(t));
    }
  }
}

std::optional<double> since(double t, const std::optional<double>& month) {
  if (!month) return std::nullopt;
  return t - *month;
}

std::optional<double> as_number(const std::optional<Diagnosis>& dx) {
  if (!dx) return std::nullopt;
  return static_cast<double>(code(*dx));
}

}  // namespace

NumericSummary NumericAnchors::at(double t) const {
  return NumericSummary{mr, since(t, mr_month), mr_change, low, since(t, low_month),
                        high, since(t, high_month)};
}

DxSummary DxAnchors::at(double t) const {
  DxSummary s;
  s.mr_dx = mr;
  s.dt_mr_dx = since(t, mr_month);
  s.best_dx = best;
  s.dt_best = since(t, best_month);
  s.worst_dx = worst;
  s.dt_worst = since(t, worst_month);
  if (mr && worst) s.milder_flag = code(*mr) < code(*worst);
  return s;
}

NumericAnchors anchor_numeric(std::span<const Observation> obs) {
  NumericAnchors a;
  if (obs.empty()) return a;
  const auto& last = obs.back();
  a.mr = last.value;
  a.mr_month = last.month;
  if (obs.size() >= 2) {
    const auto& prev = obs[obs.size() - 2];
    a.mr_change = (last.value - prev.value) / (last.month - prev.month);
  }
  // strict comparisons keep the earliest attainment
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (obs[i].value < obs[lo].value) lo = i;
    if (obs[i].value > obs[hi].value) hi = i;
  }
  a.low = obs[lo].value;
  a.low_month = obs[lo].month;
  a.high = obs[hi].value;
  a.high_month = obs[hi].month;
  return a;
}

DxAnchors anchor_diagnosis(std::span<const DxObservation> obs) {
  DxAnchors a;
  if (obs.empty()) return a;
  a.mr = obs.back().dx;
  a.mr_month = obs.back().month;
  std::size_t best = 0, worst = 0;
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (code(obs[i].dx) < code(obs[best].dx)) best = i;
    if (code(obs[i].dx) > code(obs[worst].dx)) worst = i;
  }
  a.best = obs[best].dx;
  a.best_month = obs[best].month;
  a.worst = obs[worst].dx;
  a.worst_month = obs[worst].month;
  return a;
}

NumericSummary summarize_numeric(std::span<const Observation> observations, double t) {
  check_history(observations, t);
  return anchor_numeric(observations).at(t);
}

DxSummary summarize_diagnosis(std::span<const DxObservation> observations, double t) {
  check_history(observations, t);
  return anchor_diagnosis(observations).at(t);
}

std::optional<double> L2CRow::current_age() const {
  if (!demographics.baseline_age) return std::nullopt;
  return *demographics.baseline_age + target_month / 12.0;
}

std::string_view to_string(ColumnRole role) noexcept {
  switch (role) {
    case ColumnRole::Horizon: return "horizon";
    case ColumnRole::Value: return "value";
    case ColumnRole::TimeDelta: return "time_delta";
    case ColumnRole::DxState: return "dx_state";
    case ColumnRole::DxTimeDelta: return "dx_time_delta";
    case ColumnRole::DxFlag: return "dx_flag";
    case ColumnRole::Demographic: return "demographic";
    case ColumnRole::Age: return "age";
  }
  return "";
}

std::vector<Column> row_columns(std::span<const std::string> features) {
  using enum ColumnRole;
  std::vector<Column> cols;
  cols.reserve(1 + 7 * features.size() + 7 + 5);
  cols.push_back({"horizon", Horizon});
  for (const auto& f : features) {
    cols.push_back({"mr_" + f, Value});
    cols.push_back({"time_since_mr_" + f, TimeDelta});
    cols.push_back({"mr_change_" + f, Value});
    cols.push_back({"low_" + f, Value});
    cols.push_back({"time_since_low_" + f, TimeDelta});
    cols.push_back({"high_" + f, Value});
    cols.push_back({"time_since_high_" + f, TimeDelta});
  }
  cols.push_back({"mr_DX", DxState});
  cols.push_back({"time_since_mr_DX", DxTimeDelta});
  cols.push_back({"best_DX", DxState});
  cols.push_back({"time_since_best_DX", DxTimeDelta});
  cols.push_back({"worst_DX", DxState});
  cols.push_back({"time_since_worst_DX", DxTimeDelta});
  cols.push_back({"milder_DX", DxFlag});
  cols.push_back({"apoe4", Demographic});
  cols.push_back({"is_male", Demographic});
  cols.push_back({"educ", Demographic});
  cols.push_back({"marital", Demographic});
  cols.push_back({"current_age", Age});
  return cols;
}

std::vector<std::optional<double>> flatten(const L2CRow& row) {
  std::vector<std::optional<double>> x;
  x.reserve(1 + 7 * row.features.size() + 12);
  x.emplace_back(row.horizon());
  for (const auto& a : row.features) {
    const auto s = a.at(row.target_month);
    x.insert(x.end(), {s.mr, s.dt_mr, s.mr_change, s.low, s.dt_low, s.high, s.dt_high});
  }
  const auto d = row.diagnosis();
  std::optional<double> milder;
  if (d.milder_flag) milder = *d.milder_flag ? 1.0 : 0.0;
  x.insert(x.end(), {as_number(d.mr_dx), d.dt_mr_dx, as_number(d.best_dx), d.dt_best,
                     as_number(d.worst_dx), d.dt_worst, milder});
  const auto& demo = row.demographics;
  x.push_back(demo.apoe4 ? std::optional<double>(*demo.apoe4) : std::nullopt);
  x.push_back(demo.is_male ? std::optional<double>(*demo.is_male ? 1.0 : 0.0) : std::nullopt);
  x.push_back(demo.educ);
  x.push_back(demo.marital ? std::optional<double>(*demo.marital) : std::nullopt);
  x.push_back(row.current_age());
  return x;
}

RowBuilder::RowBuilder(const Cohort& cohort, Task task)
    : feature_count_(cohort.features.size()), outcome_(cohort, task) {}

L2CRow RowBuilder::history(const PatientHistory& patient, std::size_t cutoff_index) const {
  require(cutoff_index < patient.visits.size(), "cutoff index out of range for patient " + patient.id);
  L2CRow row;
  row.patient_id = patient.id;
  row.cutoff_month = patient.visits[cutoff_index].month;
  row.demographics = patient.demographics;
  row.features.reserve(feature_count_);

  const auto visits = std::span(patient.visits).first(cutoff_index + 1);
  std::vector<Observation> obs;
  obs.reserve(visits.size());
  for (std::size_t f = 0; f < feature_count_; ++f) {
    obs.clear();
    for (const auto& v : visits) {
      if (v.values[f]) obs.push_back({v.month, *v.values[f]});
    }
    row.features.push_back(anchor_numeric(obs));
  }
  std::vector<DxObservation> dx;
  for (const auto& v : visits) {
    if (v.dx) dx.push_back({v.month, *v.dx});
  }
  row.dx = anchor_diagnosis(dx);
  return row;
}

L2CRow RowBuilder::retarget(L2CRow row, const PatientHistory& patient, double target_month) const {
  require(target_month > row.cutoff_month,
          "target month " + csv::format_number(target_month) + " must be after cutoff month " +
              csv::format_number(row.cutoff_month));
  row.target_month = target_month;
  row.target.reset();
  auto it = std::lower_bound(patient.visits.begin(), patient.visits.end(), target_month,
                             [](const Visit& v, double m) { return v.month < m; });
  if (it != patient.visits.end() && it->month == target_month) row.target = outcome_(*it);
  return row;
}

L2CRow RowBuilder::build(const PatientHistory& patient, std::size_t cutoff_index,
                         double target_month) const {
  return retarget(history(patient, cutoff_index), patient, target_month);
}

L2CRow build_row(const Cohort& cohort, const PatientHistory& patient, std::size_t cutoff_index,
                 double target_month, Task task) {
  return RowBuilder(cohort, task).build(patient, cutoff_index, target_month);
}

}  // namespace l2c
