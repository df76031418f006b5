#include "l2c/splitting.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_set>

#include "l2c/csv.hpp"
#include "l2c/error.hpp"
#include "l2c/random.hpp"

namespace l2c {

std::optional<std::size_t> FoldAssignment::fold_of(std::string_view patient_id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), patient_id,
                             [](const Entry& e, std::string_view id) { return id_less(e.patient_id, id); });
  if (it == entries.end() || it->patient_id != patient_id) return std::nullopt;
  return it->fold;
}

std::vector<std::string> FoldAssignment::patients_in(std::size_t fold) const {
  std::vector<std::string> ids;
  for (const auto& e : entries) {
    if (e.fold == fold) ids.push_back(e.patient_id);
  }
  return ids;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& e : entries) ++sizes.at(e.fold);
  return sizes;
}

FoldAssignment patient_disjoint_folds(const FeatureTable& table, std::size_t k, std::uint64_t seed,
                                      bool stratified) {
  if (k < 2) fail(ErrorKind::Config, "fold count must be at least 2");
  if (stratified && table.task != Task::DX) {
    fail(ErrorKind::Config, "stratified folds need a classification (DX) table");
  }

  // patient -> (latest target month, latest target)
  std::map<std::string, std::pair<double, std::optional<double>>, bool (*)(std::string_view, std::string_view) noexcept>
      latest(&id_less);
  for (const auto& r : table.rows) {
    auto [it, inserted] = latest.try_emplace(r.patient_id, r.target_month, r.y);
    if (!inserted && r.target_month >= it->second.first) it->second = {r.target_month, r.y};
  }
  if (latest.empty()) fail(ErrorKind::Config, "cannot split an empty table");
  if (k > latest.size()) {
    fail(ErrorKind::Config, "fold count " + std::to_string(k) + " exceeds the number of patients (" +
                                std::to_string(latest.size()) + ")");
  }

  std::vector<std::string> ids;
  ids.reserve(latest.size());
  for (const auto& [id, _] : latest) ids.push_back(id);
  Rng rng(seed);
  rng.shuffle(ids.begin(), ids.end());

  FoldAssignment out;
  out.k = k;
  std::vector<std::size_t> totals(k, 0);
  if (!stratified) {
    for (std::size_t i = 0; i < ids.size(); ++i) out.entries.push_back({ids[i], i % k});
  } else {
    // strata in key order; missing key forms its own stratum
    std::map<int, std::vector<std::string>> strata;
    for (const auto& id : ids) {
      const auto& y = latest.at(id).second;
      strata[y ? static_cast<int>(*y) : -1].push_back(id);
    }
    for (const auto& [key, members] : strata) {
      std::vector<std::size_t> in_stratum(k, 0);
      for (const auto& id : members) {
        std::size_t best = 0;
        for (std::size_t f = 1; f < k; ++f) {
          if (std::pair(in_stratum[f], totals[f]) < std::pair(in_stratum[best], totals[best])) best = f;
        }
        ++in_stratum[best];
        ++totals[best];
        out.entries.push_back({id, best});
      }
    }
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const auto& a, const auto& b) { return id_less(a.patient_id, b.patient_id); });
  return out;
}

std::vector<L2CRow> validation_rows(const RowBuilder& builder, const PatientHistory& patient) {
  const std::size_t n = patient.visits.size();
  std::vector<L2CRow> rows;
  if (n < 2) return rows;
  const std::size_t cutoff = n / 2 - 1;
  const L2CRow history = builder.history(patient, cutoff);
  for (std::size_t k = cutoff + 1; k < n; ++k) {
    auto row = builder.retarget(history, patient, patient.visits[k].month);
    if (row.target) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<L2CRow> validation_rows(const Cohort& cohort, const PatientHistory& patient, Task task) {
  return validation_rows(RowBuilder(cohort, task), patient);
}

FoldData make_fold(const Cohort& cohort, const FeatureTable& table, const FoldAssignment& folds,
                   std::size_t fold) {
  require(fold < folds.k, "fold index out of range");
  FoldData data;
  data.train.task = data.validation.task = table.task;
  data.train.columns = table.columns;
  data.validation.columns = row_columns(cohort.features);
  require(data.validation.columns == table.columns, "training table schema does not match cohort features");

  for (const auto& r : table.rows) {
    auto f = folds.fold_of(r.patient_id);
    if (!f) fail(ErrorKind::Schema, "patient " + r.patient_id + " has no fold assignment");
    if (*f != fold) data.train.rows.push_back(r);
  }
  const RowBuilder builder(cohort, table.task);
  for (const auto& id : folds.patients_in(fold)) {
    const auto* patient = cohort.find(id);
    if (!patient) fail(ErrorKind::Schema, "patient " + id + " from fold assignment is not in the cohort");
    for (const auto& row : validation_rows(builder, *patient)) data.validation.rows.push_back(to_table_row(row));
  }
  return data;
}

void write_folds(const std::string& path, const FoldAssignment& folds) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  csv::write_record(out, {"patient_id", "fold"});
  for (const auto& e : folds.entries) csv::write_record(out, {e.patient_id, std::to_string(e.fold)});
}

FoldAssignment read_folds(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  csv::Reader reader(in);
  csv::Record rec;
  if (!reader.next(rec) || rec.fields != std::vector<std::string>{"patient_id", "fold"}) {
    fail(ErrorKind::Schema, path + ": expected header patient_id,fold");
  }
  FoldAssignment folds;
  std::unordered_set<std::string> seen;
  while (reader.next(rec)) {
    if (rec.fields.size() != 2) {
      fail(ErrorKind::Parse, path + ": line " + std::to_string(rec.line) + ": expected 2 columns");
    }
    auto fold = csv::parse_number(rec.fields[1]);
    if (!fold || *fold < 0 || *fold != static_cast<double>(static_cast<std::size_t>(*fold))) {
      fail(ErrorKind::Parse, path + ": line " + std::to_string(rec.line) + ": invalid fold '" + rec.fields[1] + "'");
    }
    if (!seen.insert(rec.fields[0]).second) {
      fail(ErrorKind::Schema, path + ": patient " + rec.fields[0] + " assigned twice");
    }
    folds.entries.push_back({rec.fields[0], static_cast<std::size_t>(*fold)});
    folds.k = std::max(folds.k, static_cast<std::size_t>(*fold) + 1);
  }
  std::sort(folds.entries.begin(), folds.entries.end(),
            [](const auto& a, const auto& b) { return id_less(a.patient_id, b.patient_id); });
  return folds;
}

}  // namespace l2c
