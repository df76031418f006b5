#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "l2c/augmentation.hpp"
#include "l2c/cohort.hpp"
#include "l2c/feature_table.hpp"

namespace l2c {

struct FoldAssignment {
  struct Entry {
    std::string patient_id;
    std::size_t fold = 0;
    bool operator==(const Entry&) const = default;
  };

  std::size_t k = 0;
  std::vector<Entry> entries;  // sorted by id_less

  std::optional<std::size_t> fold_of(std::string_view patient_id) const;
  std::vector<std::string> patients_in(std::size_t fold) const;
  std::vector<std::size_t> fold_sizes() const;

  bool operator==(const FoldAssignment&) const = default;
};

/// Assigns each patient in the table to one of k folds of near-equal patient
/// count. Stratified mode (DX tables only) balances the patients' latest
/// diagnosis across folds greedily. Throws Error(Config) when k < 2 or
/// k exceeds the number of patients.
FoldAssignment patient_disjoint_folds(const FeatureTable& table, std::size_t k, std::uint64_t seed,
                                      bool stratified = false);

/// Half-history rows: the first floor(n/2) visits as history, one row per later
/// visit with the outcome present.
std::vector<L2CRow> validation_rows(const RowBuilder& builder, const PatientHistory& patient);
std::vector<L2CRow> validation_rows(const Cohort& cohort, const PatientHistory& patient, Task task);

struct FoldData {
  FeatureTable train;       // augmented rows of patients outside the fold
  FeatureTable validation;  // half-history rows of patients inside the fold
};

FoldData make_fold(const Cohort& cohort, const FeatureTable& table, const FoldAssignment& folds,
                   std::size_t fold);

void write_folds(const std::string& path, const FoldAssignment& folds);
FoldAssignment read_folds(const std::string& path);

}  // namespace l2c
