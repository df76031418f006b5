#pragma once

#include <vector>

#include "l2c/cohort.hpp"
#include "l2c/feature_table.hpp"
#include "l2c/l2c.hpp"

namespace l2c {

/// Every (cutoff, later target visit) pair of a patient: n(n-1)/2 rows for n
/// visits, before any target filtering. Order: cutoff ascending, then target.
std::vector<L2CRow> enumerate_pairs(const RowBuilder& builder, const PatientHistory& patient);

/// enumerate_pairs() with rows lacking the task outcome dropped.
std::vector<L2CRow> augment_patient(const RowBuilder& builder, const PatientHistory& patient);
std::vector<L2CRow> augment_patient(const Cohort& cohort, const PatientHistory& patient, Task task);

/// Un-augmented rows: each visit predicted from the immediately preceding visit,
/// kept when the outcome is present.
std::vector<L2CRow> consecutive_rows(const RowBuilder& builder, const PatientHistory& patient);

/// Concatenated augment_patient() over the selected patients, ordered by
/// (patient id, cutoff month, target month).
FeatureTable build_training_table(const Cohort& cohort, Task task, Membership membership,
                                  unsigned jobs = 1);

/// Sorts rows by (patient id, cutoff month, target month).
void sort_rows(std::vector<L2CRow>& rows);

}  // namespace l2c
