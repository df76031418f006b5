#include "l2c/augmentation.hpp"

#include <algorithm>

#include "l2c/parallel.hpp"

namespace l2c {

std::vector<L2CRow> enumerate_pairs(const RowBuilder& builder, const PatientHistory& patient) {
  const std::size_t n = patient.visits.size();
  std::vector<L2CRow> rows;
  if (n < 2) return rows;
  rows.reserve(n * (n - 1) / 2);
  for (std::size_t cutoff = 0; cutoff + 1 < n; ++cutoff) {
    const L2CRow history = builder.history(patient, cutoff);
    for (std::size_t target = cutoff + 1; target < n; ++target) {
      rows.push_back(builder.retarget(history, patient, patient.visits[target].month));
    }
  }
  return rows;
}

std::vector<L2CRow> augment_patient(const RowBuilder& builder, const PatientHistory& patient) {
  auto rows = enumerate_pairs(builder, patient);
  std::erase_if(rows, [](const L2CRow& r) { return !r.target.has_value(); });
  return rows;
}

std::vector<L2CRow> augment_patient(const Cohort& cohort, const PatientHistory& patient, Task task) {
  return augment_patient(RowBuilder(cohort, task), patient);
}

std::vector<L2CRow> consecutive_rows(const RowBuilder& builder, const PatientHistory& patient) {
  std::vector<L2CRow> rows;
  for (std::size_t k = 1; k < patient.visits.size(); ++k) {
    if (!builder.outcome()(patient.visits[k])) continue;
    rows.push_back(builder.build(patient, k - 1, patient.visits[k].month));
  }
  return rows;
}

void sort_rows(std::vector<L2CRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const L2CRow& a, const L2CRow& b) {
    if (a.patient_id != b.patient_id) return id_less(a.patient_id, b.patient_id);
    if (a.cutoff_month != b.cutoff_month) return a.cutoff_month < b.cutoff_month;
    return a.target_month < b.target_month;
  });
}

FeatureTable build_training_table(const Cohort& cohort, Task task, Membership membership,
                                  unsigned jobs) {
  const RowBuilder builder(cohort, task);
  std::vector<const PatientHistory*> patients;
  for (const auto& p : cohort.patients) {
    if (selected(p, membership)) patients.push_back(&p);
  }
  std::vector<std::vector<L2CRow>> per_patient(patients.size());
  parallel_for(patients.size(), jobs,
               [&](std::size_t i) { per_patient[i] = augment_patient(builder, *patients[i]); });

  std::vector<L2CRow> rows;
  for (auto& chunk : per_patient) {
    rows.insert(rows.end(), std::make_move_iterator(chunk.begin()), std::make_move_iterator(chunk.end()));
  }
  sort_rows(rows);
  return FeatureTable::from_rows(task, cohort.features, rows);
}

}  // namespace l2c
